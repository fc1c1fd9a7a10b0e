use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use super::sparse::SparseMatrix;
use super::ybus::{build_ybus, AdmittanceMatrix};
use crate::grid::{connectivity_check, BusId, BusKind, GridCase};

#[derive(Debug, Error, PartialEq)]
pub enum PfError {
    #[error("island containing bus {0} carries injections but has no slack bus")]
    NoSlack(BusId),
    #[error("singular Jacobian at iteration {0}")]
    SingularJacobian(usize),
    #[error("warm start has {got} entries, case has {expected} buses")]
    StartDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PfStart {
    Flat,
    Warm { vm: Vec<f64>, va: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub bus_ids: Vec<BusId>,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    /// Calculated net injection per bus.
    pub p_inj: Vec<f64>,
    pub q_inj: Vec<f64>,
    /// Per generator in case order; offline units read 0.
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_mismatch: f64,
    /// Buses in islands with neither slack nor injections; held at 0 V.
    pub dead: Vec<bool>,
}

/// Bus kinds as solved: PV buses without an online generator act as PQ.
pub fn effective_kinds(case: &GridCase) -> Vec<BusKind> {
    case.buses
        .iter()
        .map(|b| match b.kind {
            BusKind::Pv if !case.online_generators().any(|g| g.bus == b.id) => BusKind::Pq,
            k => k,
        })
        .collect()
}

/// Scheduled net injection per bus: online generation minus load.
pub fn scheduled_injections(case: &GridCase) -> Vec<Complex64> {
    let idx = case.bus_index();
    let mut s = vec![Complex64::new(0.0, 0.0); case.n_buses()];
    for g in case.online_generators() {
        s[idx[&g.bus]] += Complex64::new(g.pg, g.qg);
    }
    for l in &case.loads {
        s[idx[&l.bus]] -= Complex64::new(l.pd, l.qd);
    }
    s
}

fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
}

/// Complex power injection `V .* conj(Y V)` at every bus.
pub fn calc_injections(y: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    let v = voltages(vm, va);
    let i = y.matrix.mul_vec(&v);
    v.iter().zip(&i).map(|(v, i)| v * i.conj()).collect()
}

/// Derivatives of calculated injections, `(dS/dva, dS/dvm)`, sharing the
/// sparsity pattern of the admittance matrix.
pub fn injection_derivatives(
    y: &AdmittanceMatrix,
    vm: &[f64],
    va: &[f64],
) -> (SparseMatrix<Complex64>, SparseMatrix<Complex64>) {
    let n = y.dim();
    let v = voltages(vm, va);
    let unit: Vec<Complex64> = va.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
    let ibus = y.matrix.mul_vec(&v);
    let j = Complex64::new(0.0, 1.0);
    let mut d_va = Vec::with_capacity(y.matrix.nnz());
    let mut d_vm = Vec::with_capacity(y.matrix.nnz());
    for (r, c, yrc) in y.matrix.triplets() {
        let mut a = j * v[r] * (-(yrc * v[c])).conj();
        let mut m = v[r] * (yrc * unit[c]).conj();
        if r == c {
            a += j * v[r] * ibus[r].conj();
            m += ibus[r].conj() * unit[r];
        }
        d_va.push((r, c, a));
        d_vm.push((r, c, m));
    }
    (
        SparseMatrix::from_triplets(n, n, d_va),
        SparseMatrix::from_triplets(n, n, d_vm),
    )
}

/// Full Jacobian of the mismatch `S_scheduled - S_calc` with respect to the
/// state. Rows are `[P_0..P_n, Q_0..Q_n]`, columns `[va_0..va_n, vm_0..vm_n]`.
pub fn jacobian(case: &GridCase, vm: &[f64], va: &[f64]) -> SparseMatrix<f64> {
    jacobian_with(&build_ybus(case), vm, va)
}

pub fn jacobian_with(y: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> SparseMatrix<f64> {
    let n = y.dim();
    let (d_va, d_vm) = injection_derivatives(y, vm, va);
    let mut trip = Vec::with_capacity(4 * d_va.nnz());
    for (r, c, s) in d_va.triplets() {
        trip.push((r, c, -s.re));
        trip.push((n + r, c, -s.im));
    }
    for (r, c, s) in d_vm.triplets() {
        trip.push((r, n + c, -s.re));
        trip.push((n + r, n + c, -s.im));
    }
    SparseMatrix::from_triplets(2 * n, 2 * n, trip)
}

fn dead_buses(case: &GridCase, sched: &[Complex64]) -> Result<Vec<bool>, PfError> {
    let idx = case.bus_index();
    let mut dead = vec![false; case.n_buses()];
    for island in connectivity_check(case).islands {
        if island.slack_count > 0 {
            continue;
        }
        if island.buses.iter().any(|b| sched[idx[b]].norm() > 0.0) {
            return Err(PfError::NoSlack(island.buses[0]));
        }
        for b in &island.buses {
            dead[idx[b]] = true;
        }
    }
    Ok(dead)
}

/// Newton–Raphson AC power flow in polar coordinates.
pub fn solve_pf(case: &GridCase, start: &PfStart, opts: &PfOptions) -> Result<PfSolution, PfError> {
    let n = case.n_buses();
    let y = build_ybus(case);
    let kinds = effective_kinds(case);
    let sched = scheduled_injections(case);
    let dead = dead_buses(case, &sched)?;
    let idx = case.bus_index();

    let (mut vm, mut va) = match start {
        PfStart::Flat => (vec![1.0; n], vec![0.0; n]),
        PfStart::Warm { vm, va } => {
            if vm.len() != n || va.len() != n {
                return Err(PfError::StartDimension { expected: n, got: vm.len().min(va.len()) });
            }
            (vm.clone(), va.clone())
        }
    };
    let mut v_set: Vec<Option<f64>> = vec![None; n];
    for g in case.online_generators() {
        let i = idx[&g.bus];
        if kinds[i] != BusKind::Pq && v_set[i].is_none() {
            v_set[i] = Some(g.v_set);
        }
    }
    for i in 0..n {
        if dead[i] {
            vm[i] = 0.0;
            va[i] = 0.0;
            continue;
        }
        match kinds[i] {
            BusKind::Slack => {
                vm[i] = v_set[i].unwrap_or(case.buses[i].vm);
                va[i] = case.buses[i].va;
            }
            BusKind::Pv => vm[i] = v_set[i].expect("PV bus has an online generator"),
            BusKind::Pq => {}
        }
    }

    let pvpq: Vec<usize> = (0..n).filter(|&i| !dead[i] && kinds[i] != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| !dead[i] && kinds[i] == BusKind::Pq).collect();
    let rows: Vec<usize> = pvpq.iter().copied().chain(pq.iter().map(|&i| n + i)).collect();
    let cols = rows.clone();

    let mismatch = |vm: &[f64], va: &[f64]| -> Vec<f64> {
        let s = calc_injections(&y, vm, va);
        pvpq.iter()
            .map(|&i| sched[i].re - s[i].re)
            .chain(pq.iter().map(|&i| sched[i].im - s[i].im))
            .collect()
    };
    let max_abs = |f: &[f64]| f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut f = mismatch(&vm, &va);
    let mut norm = max_abs(&f);
    let mut iterations = 0;
    let mut converged = norm <= opts.tol;
    while !converged && iterations < opts.max_iter && norm.is_finite() {
        let jac = jacobian_with(&y, &vm, &va).select(&rows, &cols).to_dense();
        let lu = jac.lu();
        let diag = lu.u().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        if !(lo > hi * 1e-14) {
            return Err(PfError::SingularJacobian(iterations));
        }
        let rhs = -DVector::from_column_slice(&f);
        let dx = lu.solve(&rhs).ok_or(PfError::SingularJacobian(iterations))?;
        for (k, &i) in pvpq.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in pq.iter().enumerate() {
            vm[i] += dx[pvpq.len() + k];
        }
        iterations += 1;
        f = mismatch(&vm, &va);
        norm = max_abs(&f);
        converged = norm <= opts.tol;
    }
    if !converged {
        log::debug!("power flow stopped after {iterations} iterations, mismatch {norm:e}");
    }

    let s = calc_injections(&y, &vm, &va);
    let (pg, qg) = recover_generation(case, &kinds, &s, &idx);
    Ok(PfSolution {
        bus_ids: y.bus_ids.clone(),
        p_inj: s.iter().map(|x| x.re).collect(),
        q_inj: s.iter().map(|x| x.im).collect(),
        vm,
        va,
        pg,
        qg,
        iterations,
        converged,
        max_mismatch: norm,
        dead,
    })
}

/// Per-generator output consistent with the solved injections. At slack
/// buses the first online unit takes the P balance; reactive output at
/// slack and PV buses is shared equally among online units.
fn recover_generation(
    case: &GridCase,
    kinds: &[BusKind],
    s: &[Complex64],
    idx: &std::collections::HashMap<BusId, usize>,
) -> (Vec<f64>, Vec<f64>) {
    let n = case.n_buses();
    let mut load = vec![Complex64::new(0.0, 0.0); n];
    for l in &case.loads {
        load[idx[&l.bus]] += Complex64::new(l.pd, l.qd);
    }
    let mut pg: Vec<f64> = case.generators.iter().map(|g| if g.is_on() { g.pg } else { 0.0 }).collect();
    let mut qg: Vec<f64> = case.generators.iter().map(|g| if g.is_on() { g.qg } else { 0.0 }).collect();
    for i in 0..n {
        if kinds[i] == BusKind::Pq {
            continue;
        }
        let units: Vec<usize> = case
            .generators
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_on() && idx[&g.bus] == i)
            .map(|(k, _)| k)
            .collect();
        if units.is_empty() {
            continue;
        }
        let total = s[i] + load[i];
        if kinds[i] == BusKind::Slack {
            let others: f64 = units[1..].iter().map(|&k| pg[k]).sum();
            pg[units[0]] = total.re - others;
        }
        for &k in &units {
            qg[k] = total.im / units.len() as f64;
        }
    }
    (pg, qg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bundled_case, load_case, SwitchState};
    use crate::rng::SimRng;
    use crate::testutil::TWO_BUS;

    fn flat(case: &GridCase) -> PfSolution {
        solve_pf(case, &PfStart::Flat, &PfOptions::default()).unwrap()
    }

    #[test]
    fn zero_injection_converges_immediately() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.loads.clear();
        let sol = flat(&case);
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.vm, vec![1.0, 1.0]);
        assert_eq!(sol.va, vec![0.0, 0.0]);
    }

    // With a lossless line the bus-2 equations reduce to V2 = cos(th) and
    // 10 cos(th) sin(th) = -0.5; the angle is bracketed and bisected.
    #[test]
    fn two_bus_matches_root_finder() {
        let g = |th: f64| 10.0 * th.cos() * th.sin() + 0.5;
        let (mut lo, mut hi) = (-0.5_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let th = 0.5 * (lo + hi);
        let sol = flat(&load_case(TWO_BUS).unwrap());
        assert!(sol.converged);
        assert!((sol.va[1] - th).abs() < 1e-8, "{} vs {th}", sol.va[1]);
        assert!((sol.vm[1] - th.cos()).abs() < 1e-8);
        assert!((sol.pg[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn bundled_cases_converge_from_flat() {
        for name in ["case14", "case30", "case57"] {
            let case = bundled_case(name).unwrap();
            let sol = flat(&case);
            assert!(sol.converged, "{name}");
            assert!(sol.max_mismatch <= 1e-8, "{name}: {}", sol.max_mismatch);
            assert!(sol.iterations <= 20, "{name}: {}", sol.iterations);
        }
    }

    #[test]
    fn flat_and_warm_agree() {
        let case = bundled_case("case57").unwrap();
        let a = flat(&case);
        let start = PfStart::Warm { vm: a.vm.clone(), va: a.va.clone() };
        let b = solve_pf(&case, &start, &PfOptions::default()).unwrap();
        assert!(b.iterations <= 1);
        for i in 0..case.n_buses() {
            assert!((a.vm[i] - b.vm[i]).abs() < 1e-10);
            assert!((a.va[i] - b.va[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn losses_are_nonnegative() {
        for name in ["case14", "case30", "case57"] {
            let case = bundled_case(name).unwrap();
            let sol = flat(&case);
            let losses: f64 = sol.pg.iter().sum::<f64>() - case.total_load();
            let injected: f64 = sol.p_inj.iter().sum();
            assert!(losses >= 0.0, "{name}");
            assert!((losses - injected).abs() < 1e-8, "{name}");
        }
    }

    #[test]
    fn nonconvergence_is_flagged() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.loads[0].pd = 20.0;
        let sol = solve_pf(&case, &PfStart::Flat, &PfOptions { tol: 1e-8, max_iter: 10 }).unwrap();
        assert!(!sol.converged);
        assert!(sol.max_mismatch > 1e-8 || sol.max_mismatch.is_nan());
    }

    #[test]
    fn stranded_injection_needs_slack() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.branches[0].status = SwitchState::Open;
        assert_eq!(
            solve_pf(&case, &PfStart::Flat, &PfOptions::default()),
            Err(PfError::NoSlack(2))
        );
        case.loads.clear();
        let sol = flat(&case);
        assert!(sol.converged);
        assert_eq!(sol.dead, vec![false, true]);
        assert_eq!(sol.vm[1], 0.0);
    }

    #[test]
    fn warm_start_dimension_checked() {
        let case = load_case(TWO_BUS).unwrap();
        let start = PfStart::Warm { vm: vec![1.0], va: vec![0.0] };
        assert!(matches!(
            solve_pf(&case, &start, &PfOptions::default()),
            Err(PfError::StartDimension { .. })
        ));
    }

    #[test]
    fn lossless_two_bus_jacobian_at_flat_start() {
        let case = load_case(TWO_BUS).unwrap();
        let j = jacobian(&case, &[1.0, 1.0], &[0.0, 0.0]);
        assert!((j.value(1, 1) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_buses_have_zero_blocks() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.branches[0].status = SwitchState::Open;
        let j = jacobian(&case, &[1.0, 1.02], &[0.0, -0.1]);
        for (r, c) in [(0, 1), (1, 0), (0, 3), (2, 1), (2, 3), (3, 0), (1, 2), (3, 2)] {
            assert_eq!(j.value(r, c), 0.0, "({r},{c})");
        }
    }

    fn mismatch_full(y: &AdmittanceMatrix, sched: &[Complex64], vm: &[f64], va: &[f64]) -> Vec<f64> {
        let s = calc_injections(y, vm, va);
        let n = s.len();
        (0..2 * n)
            .map(|k| if k < n { sched[k].re - s[k].re } else { sched[k - n].im - s[k - n].im })
            .collect()
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let case = bundled_case("case14").unwrap();
        let y = build_ybus(&case);
        let sched = scheduled_injections(&case);
        let n = case.n_buses();
        let mut rng = SimRng::new(2024);
        let h = 1e-6;
        for _ in 0..50 {
            let vm: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.9, 1.1)).collect();
            let va: Vec<f64> = (0..n).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            let jac = jacobian_with(&y, &vm, &va).to_dense();
            for col in 0..2 * n {
                let (mut vm_p, mut va_p, mut vm_m, mut va_m) = (vm.clone(), va.clone(), vm.clone(), va.clone());
                if col < n {
                    va_p[col] += h;
                    va_m[col] -= h;
                } else {
                    vm_p[col - n] += h;
                    vm_m[col - n] -= h;
                }
                let fp = mismatch_full(&y, &sched, &vm_p, &va_p);
                let fm = mismatch_full(&y, &sched, &vm_m, &va_m);
                for row in 0..2 * n {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    let an = jac[(row, col)];
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "({row},{col}) {an} vs {fd}");
                }
            }
        }
    }
}
