use nalgebra::DMatrix;

use crate::data::AcopfSample;
use crate::mlp::{Activation, Mlp};
use crate::physics::{Decision, Physics};
use crate::Result;

/// Features `(load - base) / (span * base)` for every `pd` then every `qd`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaling {
    pub base_pd: Vec<f64>,
    pub base_qd: Vec<f64>,
    pub span: f64,
}

impl InputScaling {
    pub fn dim(&self) -> usize {
        self.base_pd.len() + self.base_qd.len()
    }

    pub fn features(&self, pd: &[f64], qd: &[f64]) -> Vec<f64> {
        let f = |v: &f64, b: &f64| (v - b) / (self.span * b.max(1e-6));
        pd.iter().zip(&self.base_pd).map(|(v, b)| f(v, b)).chain(qd.iter().zip(&self.base_qd).map(|(v, b)| f(v, b))).collect()
    }

    pub fn matrix<'a>(&self, samples: impl ExactSizeIterator<Item = &'a AcopfSample>) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.dim(), samples.len());
        for (mut col, s) in x.column_iter_mut().zip(samples) {
            col.copy_from_slice(&self.features(&s.pd, &s.qd));
        }
        x
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit_of(value: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let p = ((value - lo) / (hi - lo)).clamp(0.05, 0.95);
    (p / (1.0 - p)).ln()
}

/// Maps raw network outputs `z` to a decision.
///
/// Layout of `z`: `vm` for every bus, `va` for every non-slack bus, then `pg`
/// and `qg` per online generator. `vm = lo + (hi - lo) sigmoid(z + shift)` and
/// likewise for `pg`, with shifts placing `z = 0` on the reference point;
/// `va = va_ref + va_scale z` (slack pinned to 0) and `qg = qg_ref + qg_scale z`.
/// The scales keep a unit output step comparable in effect on the power
/// balance across variables, which gradient descent needs to converge.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub slack: usize,
    vm_lo: Vec<f64>,
    vm_hi: Vec<f64>,
    vm_shift: Vec<f64>,
    va_ref: Vec<f64>,
    pg_lo: Vec<f64>,
    pg_hi: Vec<f64>,
    pg_shift: Vec<f64>,
    qg_ref: Vec<f64>,
    pub va_scale: f64,
    pub qg_scale: f64,
}

impl OutputMap {
    pub fn new(physics: &Physics, reference: &Decision, va_scale: f64, qg_scale: f64) -> Result<Self> {
        physics.check(reference)?;
        let n = physics.n_bus();
        let mut va_ref = reference.va.clone();
        let pinned = va_ref[physics.slack];
        va_ref.iter_mut().for_each(|a| *a -= pinned);
        Ok(Self {
            slack: physics.slack,
            vm_lo: physics.v_min.clone(),
            vm_hi: physics.v_max.clone(),
            vm_shift: (0..n).map(|i| logit_of(reference.vm[i], physics.v_min[i], physics.v_max[i])).collect(),
            va_ref,
            pg_lo: physics.p_min.clone(),
            pg_hi: physics.p_max.clone(),
            pg_shift: (0..physics.n_gen())
                .map(|k| logit_of(reference.pg[k], physics.p_min[k], physics.p_max[k]))
                .collect(),
            qg_ref: reference.qg.clone(),
            va_scale,
            qg_scale,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.vm_lo.len()
    }

    pub fn n_gen(&self) -> usize {
        self.pg_lo.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_bus() - 1 + 2 * self.n_gen()
    }

    fn va_slot(&self, bus: usize) -> Option<usize> {
        match bus.cmp(&self.slack) {
            std::cmp::Ordering::Less => Some(self.n_bus() + bus),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(self.n_bus() + bus - 1),
        }
    }

    pub fn decode(&self, z: &[f64]) -> Decision {
        let (n, g) = (self.n_bus(), self.n_gen());
        let pg0 = 2 * n - 1;
        let window = |lo: f64, hi: f64, x: f64| if hi > lo { lo + (hi - lo) * sigmoid(x) } else { lo };
        Decision {
            vm: (0..n).map(|i| window(self.vm_lo[i], self.vm_hi[i], z[i] + self.vm_shift[i])).collect(),
            va: (0..n).map(|i| self.va_slot(i).map_or(0.0, |s| self.va_ref[i] + self.va_scale * z[s])).collect(),
            pg: (0..g).map(|k| window(self.pg_lo[k], self.pg_hi[k], z[pg0 + k] + self.pg_shift[k])).collect(),
            qg: (0..g).map(|k| self.qg_ref[k] + self.qg_scale * z[pg0 + g + k]).collect(),
        }
    }

    /// Writes `dL/dz` into `dz` given `dL/d(decision)`.
    pub fn pullback(&self, z: &[f64], grad: &Decision, dz: &mut [f64]) {
        let (n, g) = (self.n_bus(), self.n_gen());
        let pg0 = 2 * n - 1;
        let slope = |lo: f64, hi: f64, x: f64| {
            let s = sigmoid(x);
            (hi - lo).max(0.0) * s * (1.0 - s)
        };
        for i in 0..n {
            dz[i] = grad.vm[i] * slope(self.vm_lo[i], self.vm_hi[i], z[i] + self.vm_shift[i]);
            if let Some(s) = self.va_slot(i) {
                dz[s] = grad.va[i] * self.va_scale;
            }
        }
        for k in 0..g {
            dz[pg0 + k] = grad.pg[k] * slope(self.pg_lo[k], self.pg_hi[k], z[pg0 + k] + self.pg_shift[k]);
            dz[pg0 + g + k] = grad.qg[k] * self.qg_scale;
        }
    }
}

/// Network plus the fixed input scaling and output mapping around it.
#[derive(Debug, Clone, PartialEq)]
pub struct AcopfModel {
    pub mlp: Mlp,
    pub input: InputScaling,
    pub output: OutputMap,
}

impl AcopfModel {
    /// `hidden` widths between the input features and the decision outputs.
    pub fn new(
        input: InputScaling,
        output: OutputMap,
        hidden: &[usize],
        activation: Activation,
        output_gain: f64,
        seed: u64,
    ) -> Result<Self> {
        let sizes: Vec<usize> =
            std::iter::once(input.dim()).chain(hidden.iter().copied()).chain(std::iter::once(output.dim())).collect();
        Ok(Self { mlp: Mlp::new(&sizes, activation, output_gain, seed)?, input, output })
    }

    pub fn predict(&self, pd: &[f64], qd: &[f64]) -> Decision {
        let x = DMatrix::from_column_slice(self.input.dim(), 1, &self.input.features(pd, qd));
        let z = self.mlp.forward(&x);
        self.output.decode(z.as_slice())
    }

    pub fn predict_batch(&self, samples: &[AcopfSample]) -> Vec<Decision> {
        let z = self.mlp.forward(&self.input.matrix(samples.iter()));
        z.column_iter().map(|c| self.output.decode(c.as_slice())).collect()
    }
}
