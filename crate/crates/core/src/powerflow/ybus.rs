use num_complex::Complex64;

use super::sparse::SparseMatrix;
use crate::grid::{Branch, BusId, GridCase};

/// Nodal admittance matrix in bus order of the case it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub bus_ids: Vec<BusId>,
    pub matrix: SparseMatrix<Complex64>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix.value(i, j)
    }
}

/// Two-port π-model admittances `(yff, yft, ytf, ytt)` of a branch.
pub fn branch_admittance(br: &Branch) -> (Complex64, Complex64, Complex64, Complex64) {
    let ys = Complex64::new(br.r, br.x).inv();
    let half_b = Complex64::new(0.0, br.b / 2.0);
    let t = Complex64::from_polar(br.tap, br.shift);
    let ytt = ys + half_b;
    let yff = ytt / (br.tap * br.tap);
    let yft = -ys / t.conj();
    let ytf = -ys / t;
    (yff, yft, ytf, ytt)
}

pub fn build_ybus(case: &GridCase) -> AdmittanceMatrix {
    let n = case.n_buses();
    let idx = case.bus_index();
    let mut trip: Vec<(usize, usize, Complex64)> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (i, i, Complex64::new(b.gs, b.bs)))
        .collect();
    for br in case.branches.iter().filter(|b| b.is_closed()) {
        let f = idx[&br.from_bus];
        let t = idx[&br.to_bus];
        let (yff, yft, ytf, ytt) = branch_admittance(br);
        trip.push((f, f, yff));
        trip.push((f, t, yft));
        trip.push((t, f, ytf));
        trip.push((t, t, ytt));
    }
    AdmittanceMatrix {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        matrix: SparseMatrix::from_triplets(n, n, trip),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bundled_case, load_case, SwitchState};
    use crate::testutil::TWO_BUS;

    #[test]
    fn single_lossless_branch() {
        let y = build_ybus(&load_case(TWO_BUS).unwrap());
        assert!((y.get(0, 0) - Complex64::new(0.0, -10.0)).norm() < 1e-12);
        assert!((y.get(1, 1) - Complex64::new(0.0, -10.0)).norm() < 1e-12);
        assert!((y.get(0, 1) - Complex64::new(0.0, 10.0)).norm() < 1e-12);
        assert!((y.get(1, 0) - Complex64::new(0.0, 10.0)).norm() < 1e-12);
    }

    #[test]
    fn open_branches_leave_shunts() {
        let mut case = bundled_case("case30").unwrap();
        for br in &mut case.branches {
            br.status = SwitchState::Open;
        }
        let y = build_ybus(&case);
        assert_eq!(y.matrix.nnz(), case.n_buses());
        for (i, b) in case.buses.iter().enumerate() {
            assert_eq!(y.get(i, i), Complex64::new(b.gs, b.bs));
        }
    }

    #[test]
    fn symmetric_pattern() {
        let y = build_ybus(&bundled_case("case57").unwrap());
        for (r, c, _) in y.matrix.triplets() {
            assert!(y.matrix.get(c, r).is_some(), "({r},{c}) without mirror");
        }
    }

    // Dense assembly straight from the branch equations, one current
    // equation per terminal, compared entry by entry.
    #[test]
    fn matches_dense_assembly() {
        let case = bundled_case("case30").unwrap();
        let n = case.n_buses();
        let idx = case.bus_index();
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, b) in case.buses.iter().enumerate() {
            dense[i][i] += Complex64::new(b.gs, b.bs);
        }
        for br in case.branches.iter().filter(|b| b.is_closed()) {
            let (f, t) = (idx[&br.from_bus], idx[&br.to_bus]);
            let z = Complex64::new(br.r, br.x);
            let a = Complex64::from_polar(br.tap, br.shift);
            let jb2 = Complex64::new(0.0, br.b / 2.0);
            // I_f = (V_f/a - V_t)/z / conj(a) + jb/2 V_f/|a|^2
            // I_t = (V_t - V_f/a)/z + jb/2 V_t
            dense[f][f] += (1.0 / z + jb2) / a.norm_sqr();
            dense[f][t] += -1.0 / (z * a.conj());
            dense[t][f] += -1.0 / (z * a);
            dense[t][t] += 1.0 / z + jb2;
        }
        let y = build_ybus(&case);
        for i in 0..n {
            for j in 0..n {
                assert!((y.get(i, j) - dense[i][j]).norm() < 1e-12, "({i},{j})");
            }
        }
    }
}
