use gridrisk_core::grid::GridCase;
use gridrisk_core::SimRng;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::AcopfSample;
use crate::mlp::{Activation, MlpGrad};
use crate::model::{AcopfModel, InputScaling, OutputMap};
use crate::physics::{LossParts, LossWeights, Physics, ViolationReport};
use crate::{AcopfError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weights: LossWeights,
    /// Relative load deviation mapped to a unit input feature.
    pub input_span: f64,
    /// Scale of the initial output-layer weights.
    pub output_gain: f64,
    /// Angle change in rad per unit network output.
    pub va_scale: f64,
    /// Reactive output change in pu per unit network output.
    pub qg_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![200, 200],
            activation: Activation::Tanh,
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            weights: LossWeights::default(),
            input_span: 0.2,
            output_gain: 0.1,
            va_scale: 0.02,
            qg_scale: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AcopfError::Config(m.to_string()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return bad("learning_rate must be positive and momentum in [0, 1)");
        }
        if !(self.input_span > 0.0) || !(self.va_scale > 0.0) || !(self.qg_scale > 0.0) {
            return bad("input_span, va_scale and qg_scale must be positive");
        }
        let w = self.weights;
        if [w.cost, w.eq, w.ineq].iter().any(|v| !(*v >= 0.0)) {
            return bad("loss weights must be non-negative");
        }
        Ok(())
    }
}

/// Sample-averaged loss terms of one epoch, evaluated on the parameters in
/// effect when each batch was visited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub cost: f64,
    pub eq: f64,
    pub ineq: f64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: AcopfModel,
    pub loss_trace: Vec<EpochLoss>,
}

/// Untrained model for `case`: inputs scaled around `base`, outputs centred
/// on the case's reference operating point.
pub fn init_model(case: &GridCase, base: &(Vec<f64>, Vec<f64>), cfg: &TrainConfig, seed: u64) -> Result<AcopfModel> {
    cfg.validate()?;
    let physics = Physics::new(case)?;
    let reference = physics.reference_decision(case)?;
    let input = InputScaling { base_pd: base.0.clone(), base_qd: base.1.clone(), span: cfg.input_span };
    let output = OutputMap::new(&physics, &reference, cfg.va_scale, cfg.qg_scale)?;
    AcopfModel::new(input, output, &cfg.hidden, cfg.activation, cfg.output_gain, seed)
}

/// Mean penalty loss of `samples` and its gradient with respect to the
/// network parameters.
pub fn batch_loss(model: &AcopfModel, physics: &Physics, samples: &[&AcopfSample], w: &LossWeights) -> (LossParts, MlpGrad) {
    let x = model.input.matrix(samples.iter().copied());
    let trace = model.mlp.forward_trace(&x);
    let z = trace.last().expect("output layer");
    let scale = 1.0 / samples.len() as f64;
    let mut d_out = DMatrix::zeros(z.nrows(), z.ncols());
    let mut sum = LossParts::default();
    for (c, s) in samples.iter().enumerate() {
        let zc = z.column(c);
        let decision = model.output.decode(zc.as_slice());
        let (parts, grad) = physics.penalty(&s.pd, &s.qd, &decision, w);
        sum.cost += parts.cost * scale;
        sum.eq += parts.eq * scale;
        sum.ineq += parts.ineq * scale;
        let mut col = vec![0.0; z.nrows()];
        model.output.pullback(zc.as_slice(), &grad, &mut col);
        d_out.column_mut(c).copy_from_slice(&col);
    }
    d_out *= scale;
    (sum, model.mlp.backward(&trace, d_out))
}

/// Mini-batch momentum gradient descent on the penalty loss. Batches are
/// reshuffled every epoch from `seed`.
pub fn train_penalty(
    mut model: AcopfModel,
    samples: &[AcopfSample],
    case: &GridCase,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Trained> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(AcopfError::Empty);
    }
    let physics = Physics::new(case)?;
    let mut rng = SimRng::derive(seed, 0x7472_6e);
    let mut vel_w: Vec<DMatrix<f64>> = model.mlp.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect();
    let mut vel_b: Vec<_> = model.mlp.biases.iter().map(|b| b.scale(0.0)).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut acc = LossParts::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&AcopfSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (parts, grad) = batch_loss(&model, &physics, &batch, &cfg.weights);
            let share = chunk.len() as f64 / samples.len() as f64;
            acc.cost += parts.cost * share;
            acc.eq += parts.eq * share;
            acc.ineq += parts.ineq * share;
            if !parts.total().is_finite() {
                return Err(AcopfError::Diverged { epoch });
            }
            for (l, (gw, gb)) in grad.weights.iter().zip(&grad.biases).enumerate() {
                vel_w[l] *= cfg.momentum;
                vel_w[l] -= gw * cfg.learning_rate;
                model.mlp.weights[l] += &vel_w[l];
                vel_b[l] *= cfg.momentum;
                vel_b[l] -= gb * cfg.learning_rate;
                model.mlp.biases[l] += &vel_b[l];
            }
        }
        let total = acc.total();
        if !total.is_finite() {
            return Err(AcopfError::Diverged { epoch });
        }
        log::debug!("epoch {epoch}: loss {total:.6e} (eq {:.3e}, ineq {:.3e})", acc.eq, acc.ineq);
        loss_trace.push(EpochLoss { epoch, total, cost: acc.cost, eq: acc.eq, ineq: acc.ineq });
    }
    Ok(Trained { model, loss_trace })
}

/// Per-sample violations of the model's predictions.
pub fn sample_violations(model: &AcopfModel, samples: &[AcopfSample], case: &GridCase) -> Result<Vec<ViolationReport>> {
    let physics = Physics::new(case)?;
    model
        .predict_batch(samples)
        .iter()
        .zip(samples)
        .map(|(d, s)| physics.violations(&s.pd, &s.qd, d))
        .collect()
}

/// Mean violation of the model over `samples`.
pub fn evaluate_generalization(model: &AcopfModel, samples: &[AcopfSample], case: &GridCase) -> Result<ViolationReport> {
    if samples.is_empty() {
        return Err(AcopfError::Empty);
    }
    Ok(ViolationReport::mean(&sample_violations(model, samples, case)?))
}
