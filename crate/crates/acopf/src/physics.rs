use gridrisk_core::grid::{BusKind, GridCase};
use gridrisk_core::powerflow::{
    branch_admittance, build_ybus, calc_injections, injection_derivatives, solve_pf, AdmittanceMatrix, PfOptions,
    PfStart,
};
use gridrisk_core::scenario::generation_dispatch;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{AcopfError, Result};

/// Full operating point: voltage magnitude and angle at every bus, active and
/// reactive output of every online generator (case order).
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
}

impl Decision {
    pub fn zeros(n_bus: usize, n_gen: usize) -> Self {
        Self { vm: vec![0.0; n_bus], va: vec![0.0; n_bus], pg: vec![0.0; n_gen], qg: vec![0.0; n_gen] }
    }
}

/// Mean constraint violation in pu.
///
/// `overall_mean` weights every constraint alike: it is the mean over the
/// `2 n_bus` equality residuals and all inequality terms together.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub equality_mean: f64,
    pub inequality_mean: f64,
    pub overall_mean: f64,
}

impl ViolationReport {
    /// Component-wise mean; zero for an empty slice.
    pub fn mean(reports: &[ViolationReport]) -> Self {
        if reports.is_empty() {
            return Self::default();
        }
        let n = reports.len() as f64;
        Self {
            equality_mean: reports.iter().map(|r| r.equality_mean).sum::<f64>() / n,
            inequality_mean: reports.iter().map(|r| r.inequality_mean).sum::<f64>() / n,
            overall_mean: reports.iter().map(|r| r.overall_mean).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub cost: f64,
    pub eq: f64,
    pub ineq: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { cost: 0.1, eq: 10.0, ineq: 10.0 }
    }
}

/// Weighted loss terms of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossParts {
    pub cost: f64,
    pub eq: f64,
    pub ineq: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.cost + self.eq + self.ineq
    }
}

#[derive(Debug, Clone)]
struct RatedBranch {
    f: usize,
    t: usize,
    yff: Complex64,
    yft: Complex64,
    ytf: Complex64,
    ytt: Complex64,
    rate: f64,
}

/// Apparent power leaving end `a` towards `b` and its derivatives with
/// respect to `(va_a, va_b, vm_a, vm_b)`.
fn end_flow(vm_a: f64, va_a: f64, vm_b: f64, va_b: f64, yaa: Complex64, yab: Complex64) -> (Complex64, [Complex64; 4]) {
    let j = Complex64::new(0.0, 1.0);
    let ua = Complex64::from_polar(1.0, va_a);
    let ub = Complex64::from_polar(1.0, va_b);
    let (v_a, v_b) = (ua * vm_a, ub * vm_b);
    let cross = v_a * (yab * v_b).conj();
    let s = vm_a * vm_a * yaa.conj() + cross;
    let d = [j * cross, -j * cross, 2.0 * vm_a * yaa.conj() + ua * (yab * v_b).conj(), v_a * (yab * ub).conj()];
    (s, d)
}

/// Constraint data of a case, laid out for repeated evaluation.
///
/// Inequality terms are signed `h <= 0` in a fixed order: for every online
/// generator `pg - p_max`, `p_min - pg`, `qg - q_max`, `q_min - qg`; for every
/// bus `vm - v_max`, `v_min - vm`; for every closed branch with a rating
/// `|S_from| - rate`, `|S_to| - rate`.
#[derive(Debug, Clone)]
pub struct Physics {
    y: AdmittanceMatrix,
    pub slack: usize,
    /// Bus index of each online generator.
    pub gen_bus: Vec<usize>,
    /// Case index of each online generator.
    pub gen_index: Vec<usize>,
    pub load_bus: Vec<usize>,
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    cost: Vec<[f64; 3]>,
    /// Generation cost with every online unit at `p_max`.
    pub cost_scale: f64,
    branches: Vec<RatedBranch>,
}

impl Physics {
    pub fn new(case: &GridCase) -> Result<Self> {
        let idx = case.bus_index();
        let slack = case.buses.iter().position(|b| b.kind == BusKind::Slack).ok_or(AcopfError::NoSlack)?;
        let gen_index: Vec<usize> = (0..case.generators.len()).filter(|&i| case.generators[i].is_on()).collect();
        let gens: Vec<_> = gen_index.iter().map(|&i| &case.generators[i]).collect();
        let cost: Vec<[f64; 3]> = gens.iter().map(|g| [g.cost_c2, g.cost_c1, g.cost_c0]).collect();
        let full: f64 = gens.iter().map(|g| g.cost(g.p_max)).sum();
        let branches = case
            .branches
            .iter()
            .filter(|b| b.is_closed() && b.rate_a > 0.0)
            .map(|b| {
                let (yff, yft, ytf, ytt) = branch_admittance(b);
                RatedBranch { f: idx[&b.from_bus], t: idx[&b.to_bus], yff, yft, ytf, ytt, rate: b.rate_a }
            })
            .collect();
        Ok(Self {
            y: build_ybus(case),
            slack,
            gen_bus: gens.iter().map(|g| idx[&g.bus]).collect(),
            gen_index,
            load_bus: case.loads.iter().map(|l| idx[&l.bus]).collect(),
            v_min: case.buses.iter().map(|b| b.v_min).collect(),
            v_max: case.buses.iter().map(|b| b.v_max).collect(),
            p_min: gens.iter().map(|g| g.p_min).collect(),
            p_max: gens.iter().map(|g| g.p_max).collect(),
            q_min: gens.iter().map(|g| g.q_min).collect(),
            q_max: gens.iter().map(|g| g.q_max).collect(),
            cost,
            cost_scale: if full.abs() > 0.0 { full.abs() } else { 1.0 },
            branches,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.v_min.len()
    }

    pub fn n_gen(&self) -> usize {
        self.gen_bus.len()
    }

    pub fn n_loads(&self) -> usize {
        self.load_bus.len()
    }

    pub fn n_equality(&self) -> usize {
        2 * self.n_bus()
    }

    pub fn n_inequality(&self) -> usize {
        4 * self.n_gen() + 2 * self.n_bus() + 2 * self.branches.len()
    }

    pub fn check(&self, d: &Decision) -> Result<()> {
        let dims = [
            ("vm", self.n_bus(), d.vm.len()),
            ("va", self.n_bus(), d.va.len()),
            ("pg", self.n_gen(), d.pg.len()),
            ("qg", self.n_gen(), d.qg.len()),
        ];
        for (what, expected, got) in dims {
            if expected != got {
                return Err(AcopfError::Dimension { what, expected, got });
            }
        }
        Ok(())
    }

    fn check_loads(&self, pd: &[f64], qd: &[f64]) -> Result<()> {
        for (what, got) in [("pd", pd.len()), ("qd", qd.len())] {
            if got != self.n_loads() {
                return Err(AcopfError::Dimension { what, expected: self.n_loads(), got });
            }
        }
        Ok(())
    }

    /// `[P_0..P_n, Q_0..Q_n]` of generation minus demand minus calculated
    /// injection at every bus.
    pub fn equality_residuals(&self, pd: &[f64], qd: &[f64], d: &Decision) -> Vec<f64> {
        let n = self.n_bus();
        let s = calc_injections(&self.y, &d.vm, &d.va);
        let mut r = vec![0.0; 2 * n];
        for i in 0..n {
            r[i] = -s[i].re;
            r[n + i] = -s[i].im;
        }
        for (k, &b) in self.gen_bus.iter().enumerate() {
            r[b] += d.pg[k];
            r[n + b] += d.qg[k];
        }
        for (j, &b) in self.load_bus.iter().enumerate() {
            r[b] -= pd[j];
            r[n + b] -= qd[j];
        }
        r
    }

    /// Signed inequality terms in the documented order.
    pub fn inequality_terms(&self, d: &Decision) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.n_inequality());
        for k in 0..self.n_gen() {
            h.extend([d.pg[k] - self.p_max[k], self.p_min[k] - d.pg[k], d.qg[k] - self.q_max[k], self.q_min[k] - d.qg[k]]);
        }
        for i in 0..self.n_bus() {
            h.extend([d.vm[i] - self.v_max[i], self.v_min[i] - d.vm[i]]);
        }
        for br in &self.branches {
            let (sf, _) = end_flow(d.vm[br.f], d.va[br.f], d.vm[br.t], d.va[br.t], br.yff, br.yft);
            let (st, _) = end_flow(d.vm[br.t], d.va[br.t], d.vm[br.f], d.va[br.f], br.ytt, br.ytf);
            h.extend([sf.norm() - br.rate, st.norm() - br.rate]);
        }
        h
    }

    pub fn violations(&self, pd: &[f64], qd: &[f64], d: &Decision) -> Result<ViolationReport> {
        self.check(d)?;
        self.check_loads(pd, qd)?;
        let eq: f64 = self.equality_residuals(pd, qd, d).iter().map(|r| r.abs()).sum();
        let ineq: f64 = self.inequality_terms(d).iter().map(|h| h.max(0.0)).sum();
        let (ne, ni) = (self.n_equality() as f64, self.n_inequality() as f64);
        Ok(ViolationReport { equality_mean: eq / ne, inequality_mean: ineq / ni, overall_mean: (eq + ineq) / (ne + ni) })
    }

    /// Generation cost divided by [`Physics::cost_scale`].
    pub fn normalized_cost(&self, d: &Decision) -> f64 {
        let c: f64 = self.cost.iter().zip(&d.pg).map(|(c, p)| c[0] * p * p + c[1] * p + c[2]).sum();
        c / self.cost_scale
    }

    /// Penalty loss of one sample and its gradient with respect to the
    /// decision. The slack angle is fixed, so its gradient entry is 0.
    pub fn penalty(&self, pd: &[f64], qd: &[f64], d: &Decision, w: &LossWeights) -> (LossParts, Decision) {
        let n = self.n_bus();
        let mut g = Decision::zeros(n, self.n_gen());
        let r = self.equality_residuals(pd, qd, d);
        let (ne, ni) = (self.n_equality() as f64, self.n_inequality() as f64);
        let mut parts = LossParts {
            cost: w.cost * self.normalized_cost(d),
            eq: w.eq * r.iter().map(|x| x * x).sum::<f64>() / ne,
            ineq: 0.0,
        };

        let ge = 2.0 * w.eq / ne;
        let (d_va, d_vm) = injection_derivatives(&self.y, &d.vm, &d.va);
        for (row, col, v) in d_va.triplets() {
            g.va[col] -= ge * (r[row] * v.re + r[n + row] * v.im);
        }
        for (row, col, v) in d_vm.triplets() {
            g.vm[col] -= ge * (r[row] * v.re + r[n + row] * v.im);
        }
        for (k, &b) in self.gen_bus.iter().enumerate() {
            g.pg[k] += ge * r[b];
            g.qg[k] += ge * r[n + b];
        }

        let gi = 2.0 * w.ineq / ni;
        let mut sq = 0.0;
        let mut clip = |h: f64, sign: f64, grad: &mut f64| {
            if h > 0.0 {
                sq += h * h;
                *grad += gi * h * sign;
            }
        };
        for k in 0..self.n_gen() {
            clip(d.pg[k] - self.p_max[k], 1.0, &mut g.pg[k]);
            clip(self.p_min[k] - d.pg[k], -1.0, &mut g.pg[k]);
            clip(d.qg[k] - self.q_max[k], 1.0, &mut g.qg[k]);
            clip(self.q_min[k] - d.qg[k], -1.0, &mut g.qg[k]);
        }
        for i in 0..n {
            clip(d.vm[i] - self.v_max[i], 1.0, &mut g.vm[i]);
            clip(self.v_min[i] - d.vm[i], -1.0, &mut g.vm[i]);
        }
        for br in &self.branches {
            let ends = [
                (br.f, br.t, end_flow(d.vm[br.f], d.va[br.f], d.vm[br.t], d.va[br.t], br.yff, br.yft)),
                (br.t, br.f, end_flow(d.vm[br.t], d.va[br.t], d.vm[br.f], d.va[br.f], br.ytt, br.ytf)),
            ];
            for (a, b, (s, ds)) in ends {
                let mag = s.norm();
                let h = mag - br.rate;
                if h <= 0.0 {
                    continue;
                }
                sq += h * h;
                let coef = gi * h / mag;
                let dm = |x: Complex64| (s.conj() * x).re;
                g.va[a] += coef * dm(ds[0]);
                g.va[b] += coef * dm(ds[1]);
                g.vm[a] += coef * dm(ds[2]);
                g.vm[b] += coef * dm(ds[3]);
            }
        }
        parts.ineq = w.ineq * sq / ni;

        for (k, c) in self.cost.iter().enumerate() {
            g.pg[k] += w.cost * (2.0 * c[0] * d.pg[k] + c[1]) / self.cost_scale;
        }
        g.va[self.slack] = 0.0;
        (parts, g)
    }

    /// Operating point of `case` at its own loads: proportional dispatch,
    /// then a power flow with the slack unit balancing.
    pub fn reference_decision(&self, case: &GridCase) -> Result<Decision> {
        let mut case = case.clone();
        let pg = generation_dispatch(&case, case.total_load(), 0.0)?;
        for (g, p) in case.generators.iter_mut().zip(pg) {
            g.pg = p;
        }
        let sol = solve_pf(&case, &PfStart::Flat, &PfOptions::default())?;
        if !sol.converged {
            return Err(AcopfError::Reference);
        }
        Ok(Decision {
            vm: sol.vm.clone(),
            va: sol.va.clone(),
            pg: self.gen_index.iter().map(|&i| sol.pg[i]).collect(),
            qg: self.gen_index.iter().map(|&i| sol.qg[i]).collect(),
        })
    }
}

/// Violation of `decision` against the loads stored on `case`.
pub fn acopf_violations(case: &GridCase, decision: &Decision) -> Result<ViolationReport> {
    let physics = Physics::new(case)?;
    let pd: Vec<f64> = case.loads.iter().map(|l| l.pd).collect();
    let qd: Vec<f64> = case.loads.iter().map(|l| l.qd).collect();
    physics.violations(&pd, &qd, decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridrisk_core::grid::bundled_case;
    use gridrisk_core::SimRng;

    fn loads(case: &GridCase) -> (Vec<f64>, Vec<f64>) {
        (case.loads.iter().map(|l| l.pd).collect(), case.loads.iter().map(|l| l.qd).collect())
    }

    fn perturbed(p: &Physics, base: &Decision, rng: &mut SimRng, scale: f64) -> Decision {
        let mut d = base.clone();
        d.vm.iter_mut().for_each(|v| *v += scale * rng.normal());
        d.va.iter_mut().for_each(|v| *v += scale * rng.normal());
        d.pg.iter_mut().for_each(|v| *v += 3.0 * scale * rng.normal());
        d.qg.iter_mut().for_each(|v| *v += 3.0 * scale * rng.normal());
        d.va[p.slack] = 0.0;
        d
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let case = bundled_case("case30").unwrap();
        let p = Physics::new(&case).unwrap();
        let (pd, qd) = loads(&case);
        let base = p.reference_decision(&case).unwrap();
        let mut rng = SimRng::new(11);
        let w = LossWeights::default();
        for trial in 0..3 {
            let d = perturbed(&p, &base, &mut rng, 0.05);
            let (_, g) = p.penalty(&pd, &qd, &d, &w);
            let f = |d: &Decision| p.penalty(&pd, &qd, d, &w).0.total();
            let h = 1e-6;
            let check = |get: &dyn Fn(&mut Decision) -> &mut f64, analytic: f64, what: &str| {
                let mut up = d.clone();
                *get(&mut up) += h;
                let mut down = d.clone();
                *get(&mut down) -= h;
                let fd = (f(&up) - f(&down)) / (2.0 * h);
                assert!((fd - analytic).abs() <= 1e-5 * fd.abs().max(1e-3), "trial {trial} {what}: fd {fd} vs {analytic}");
            };
            for i in 0..p.n_bus() {
                check(&|d: &mut Decision| &mut d.vm[i], g.vm[i], &format!("vm{i}"));
                if i != p.slack {
                    check(&|d: &mut Decision| &mut d.va[i], g.va[i], &format!("va{i}"));
                }
            }
            for k in 0..p.n_gen() {
                check(&|d: &mut Decision| &mut d.pg[k], g.pg[k], &format!("pg{k}"));
                check(&|d: &mut Decision| &mut d.qg[k], g.qg[k], &format!("qg{k}"));
            }
        }
    }

    fn relaxed(case: &GridCase) -> GridCase {
        let mut c = case.clone();
        for b in &mut c.buses {
            b.v_min = 0.5;
            b.v_max = 1.5;
        }
        for g in &mut c.generators {
            g.p_min = -10.0;
            g.p_max = 10.0;
            g.q_min = -10.0;
            g.q_max = 10.0;
        }
        c.branches.iter_mut().for_each(|b| b.rate_a = 0.0);
        c
    }

    #[test]
    fn power_flow_point_with_slack_limits_is_feasible() {
        for name in ["case14", "case30", "case57"] {
            let case = relaxed(&bundled_case(name).unwrap());
            let p = Physics::new(&case).unwrap();
            let d = p.reference_decision(&case).unwrap();
            let v = acopf_violations(&case, &d).unwrap();
            assert!(v.overall_mean <= 1e-6 && v.inequality_mean == 0.0, "{name}: {v:?}");
        }
    }

    #[test]
    fn raised_generator_contributes_its_excess() {
        let case = bundled_case("case30").unwrap();
        let p = Physics::new(&case).unwrap();
        let mut d = p.reference_decision(&relaxed(&case)).unwrap();
        d.pg[2] = p.p_max[2] + 0.1;
        let h = p.inequality_terms(&d);
        assert!((h[4 * 2] - 0.1).abs() < 1e-12);
        let before = acopf_violations(&case, &p.reference_decision(&relaxed(&case)).unwrap()).unwrap();
        let after = acopf_violations(&case, &d).unwrap();
        let ni = p.n_inequality() as f64;
        assert!((after.inequality_mean * ni - before.inequality_mean * ni - 0.1).abs() < 1e-12);
        assert!(after.overall_mean > 0.0);
    }

    #[test]
    fn any_exceeded_limit_is_positive() {
        let case = relaxed(&bundled_case("case14").unwrap());
        let p = Physics::new(&case).unwrap();
        let (pd, qd) = loads(&case);
        let d = p.reference_decision(&case).unwrap();
        let mut tight = case.clone();
        tight.buses[3].v_max = d.vm[3] - 1e-4;
        let pt = Physics::new(&tight).unwrap();
        assert!(pt.violations(&pd, &qd, &d).unwrap().inequality_mean > 0.0);
        let mut rated = case.clone();
        rated.branches[0].rate_a = 1e-3;
        assert!(Physics::new(&rated).unwrap().violations(&pd, &qd, &d).unwrap().inequality_mean > 0.0);
    }

    /// Mismatch from the polar power-flow equations with a dense admittance
    /// matrix assembled branch by branch.
    fn oracle_mismatch(case: &GridCase, pd: &[f64], qd: &[f64], d: &Decision) -> Vec<f64> {
        let n = case.n_buses();
        let idx = case.bus_index();
        let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, b) in case.buses.iter().enumerate() {
            y[i][i] += Complex64::new(b.gs, b.bs);
        }
        for br in case.branches.iter().filter(|b| b.is_closed()) {
            let (f, t) = (idx[&br.from_bus], idx[&br.to_bus]);
            let ys = 1.0 / Complex64::new(br.r, br.x);
            let tap = Complex64::from_polar(br.tap, br.shift);
            let bc = Complex64::new(0.0, br.b / 2.0);
            y[f][f] += (ys + bc) / (br.tap * br.tap);
            y[t][t] += ys + bc;
            y[f][t] -= ys / tap.conj();
            y[t][f] -= ys / tap;
        }
        let mut out = vec![0.0; 2 * n];
        for i in 0..n {
            let (mut p, mut q) = (0.0, 0.0);
            for k in 0..n {
                let (g, b) = (y[i][k].re, y[i][k].im);
                let th = d.va[i] - d.va[k];
                p += d.vm[i] * d.vm[k] * (g * th.cos() + b * th.sin());
                q += d.vm[i] * d.vm[k] * (g * th.sin() - b * th.cos());
            }
            out[i] = -p;
            out[n + i] = -q;
        }
        for (k, gi) in case.generators.iter().enumerate().filter(|(_, g)| g.is_on()).map(|(k, g)| (k, idx[&g.bus])) {
            let slot = case.generators[..k].iter().filter(|g| g.is_on()).count();
            out[gi] += d.pg[slot];
            out[n + gi] += d.qg[slot];
        }
        for (j, l) in case.loads.iter().enumerate() {
            out[idx[&l.bus]] -= pd[j];
            out[n + idx[&l.bus]] -= qd[j];
        }
        out
    }

    #[test]
    fn equality_residuals_match_polar_equations() {
        let case = bundled_case("case30").unwrap();
        let p = Physics::new(&case).unwrap();
        let (pd, qd) = loads(&case);
        let mut rng = SimRng::new(5);
        for _ in 0..20 {
            let d = Decision {
                vm: (0..p.n_bus()).map(|_| rng.uniform_range(0.9, 1.1)).collect(),
                va: (0..p.n_bus()).map(|_| rng.uniform_range(-0.5, 0.5)).collect(),
                pg: (0..p.n_gen()).map(|_| rng.uniform_range(0.0, 1.0)).collect(),
                qg: (0..p.n_gen()).map(|_| rng.uniform_range(-0.5, 0.5)).collect(),
            };
            let got = p.equality_residuals(&pd, &qd, &d);
            let want = oracle_mismatch(&case, &pd, &qd, &d);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let case = bundled_case("case14").unwrap();
        let mut d = Physics::new(&case).unwrap().reference_decision(&case).unwrap();
        d.pg.pop();
        assert!(matches!(acopf_violations(&case, &d), Err(AcopfError::Dimension { what: "pg", .. })));
    }
}
