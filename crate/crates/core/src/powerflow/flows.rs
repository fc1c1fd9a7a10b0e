use num_complex::Complex64;

use super::newton::PfSolution;
use super::ybus::branch_admittance;
use crate::grid::GridCase;

/// Terminal quantities of one branch (pu).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
    pub i_from: f64,
    pub i_to: f64,
}

impl BranchFlow {
    pub fn s_from(&self) -> f64 {
        self.p_from.hypot(self.q_from)
    }

    pub fn s_to(&self) -> f64 {
        self.p_to.hypot(self.q_to)
    }
}

/// π-model flows for every branch in case order. Open branches read zero.
pub fn branch_flows(case: &GridCase, sol: &PfSolution) -> Vec<BranchFlow> {
    let idx = case.bus_index();
    let v = |id| {
        let i = idx[&id];
        Complex64::from_polar(sol.vm[i], sol.va[i])
    };
    case.branches
        .iter()
        .map(|br| {
            if !br.is_closed() {
                return BranchFlow::default();
            }
            let (yff, yft, ytf, ytt) = branch_admittance(br);
            let (vf, vt) = (v(br.from_bus), v(br.to_bus));
            let i_f = yff * vf + yft * vt;
            let i_t = ytf * vf + ytt * vt;
            let s_f = vf * i_f.conj();
            let s_t = vt * i_t.conj();
            BranchFlow {
                p_from: s_f.re,
                q_from: s_f.im,
                p_to: s_t.re,
                q_to: s_t.im,
                i_from: i_f.norm(),
                i_to: i_t.norm(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bundled_case, load_case, SwitchState};
    use crate::powerflow::{solve_pf, PfOptions, PfStart};
    use crate::testutil::TWO_BUS;

    #[test]
    fn open_and_lossless_branches() {
        let mut case = load_case(TWO_BUS).unwrap();
        let sol = solve_pf(&case, &PfStart::Flat, &PfOptions::default()).unwrap();
        let f = branch_flows(&case, &sol)[0];
        assert!((f.p_from + f.p_to).abs() < 1e-12);
        assert!((f.p_from - 0.5).abs() < 1e-8);
        case.branches[0].status = SwitchState::Open;
        assert_eq!(branch_flows(&case, &sol)[0], BranchFlow::default());
    }

    // Kirchhoff: bus injection = shunt draw + sum of flows leaving the bus.
    #[test]
    fn flows_balance_injections() {
        for name in ["case14", "case30", "case57"] {
            let case = bundled_case(name).unwrap();
            let sol = solve_pf(&case, &PfStart::Flat, &PfOptions::default()).unwrap();
            let flows = branch_flows(&case, &sol);
            let idx = case.bus_index();
            let mut p = vec![0.0; case.n_buses()];
            let mut q = vec![0.0; case.n_buses()];
            for (i, b) in case.buses.iter().enumerate() {
                let v2 = sol.vm[i] * sol.vm[i];
                p[i] += b.gs * v2;
                q[i] -= b.bs * v2;
            }
            for (br, f) in case.branches.iter().zip(&flows) {
                p[idx[&br.from_bus]] += f.p_from;
                q[idx[&br.from_bus]] += f.q_from;
                p[idx[&br.to_bus]] += f.p_to;
                q[idx[&br.to_bus]] += f.q_to;
            }
            for i in 0..case.n_buses() {
                assert!((p[i] - sol.p_inj[i]).abs() < 1e-6, "{name} bus {i}");
                assert!((q[i] - sol.q_inj[i]).abs() < 1e-6, "{name} bus {i}");
            }
        }
    }
}
