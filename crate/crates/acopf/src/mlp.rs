use gridrisk_core::SimRng;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{AcopfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => f64::from(u8::from(a > 0.0)),
        }
    }
}

/// Fully connected network with a linear output layer. Samples are columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub activation: Activation,
}

/// Per-layer gradients, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. The output layer is scaled by
    /// `output_gain` so an untrained model stays near the output mapping's
    /// reference point.
    pub fn new(sizes: &[usize], activation: Activation, output_gain: f64, seed: u64) -> Result<Self> {
        let mut mlp = Self::zeros(sizes, activation)?;
        let mut rng = SimRng::derive(seed, 0x6d6c_70);
        let last = mlp.weights.len() - 1;
        for (l, w) in mlp.weights.iter_mut().enumerate() {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            let gain = if l == last { output_gain } else { 1.0 };
            w.iter_mut().for_each(|v| *v = gain * rng.uniform_range(-limit, limit));
        }
        Ok(mlp)
    }

    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(AcopfError::Config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            weights: sizes.windows(2).map(|p| DMatrix::zeros(p[1], p[0])).collect(),
            biases: sizes[1..].iter().map(|&n| DVector::zeros(n)).collect(),
            activation,
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.weights[0].ncols()).chain(self.weights.iter().map(|w| w.nrows())).collect()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Layer outputs for input columns `x`: `[x, a_1, .., a_L]`, the last linear.
    pub fn forward_trace(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut out = vec![x.clone()];
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * out.last().expect("input present");
            for mut col in z.column_iter_mut() {
                col += b;
            }
            if l < last {
                z.apply(|v| *v = self.activation.apply(*v));
            }
            out.push(z);
        }
        out
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_trace(x).pop().expect("output layer")
    }

    /// Gradient of a loss whose derivative with respect to the output columns
    /// is `d_out`.
    pub fn backward(&self, trace: &[DMatrix<f64>], d_out: DMatrix<f64>) -> MlpGrad {
        let depth = self.weights.len();
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        let mut delta = d_out;
        for l in (0..depth).rev() {
            weights.push(&delta * trace[l].transpose());
            biases.push(delta.column_sum());
            if l > 0 {
                let mut prev = self.weights[l].tr_mul(&delta);
                prev.zip_apply(&trace[l], |d, a| *d *= self.activation.slope(a));
                delta = prev;
            }
        }
        weights.reverse();
        biases.reverse();
        MlpGrad { weights, biases }
    }

    /// Parameters flattened layer by layer (weights column-major, then bias).
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend(w.iter());
            p.extend(b.iter());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            w.iter_mut().chain(b.iter_mut()).for_each(|v| *v = *it.next().expect("parameter count"));
        }
    }
}

impl MlpGrad {
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.extend(w.iter());
            p.extend(b.iter());
        }
        p
    }
}
