use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::LOAD_FLOOR;
use crate::grid::LoadStyle;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Constant,
    Smooth,
    Oscillating,
    Abrupt,
    GenConstant,
    GenRamping,
    GenUnitCommit,
}

impl From<LoadStyle> for Style {
    fn from(s: LoadStyle) -> Self {
        match s {
            LoadStyle::Constant => Style::Constant,
            LoadStyle::Smooth => Style::Smooth,
            LoadStyle::Oscillating => Style::Oscillating,
            LoadStyle::Abrupt => Style::Abrupt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleParams {
    pub style: Style,
    pub peak_tick: usize,
    /// Relative amplitude of the daily hump (or ramp half-range).
    pub amplitude: f64,
    /// Ripple period in ticks for the oscillating style.
    pub ripple_period: f64,
    pub ripple_amplitude: f64,
    pub step_tick: usize,
    pub step_height: f64,
    /// Half-open `[start, end)` tick ranges with the unit off.
    pub off_intervals: Vec<(usize, usize)>,
}

impl Default for StyleParams {
    fn default() -> Self {
        Self {
            style: Style::Constant,
            peak_tick: 0,
            amplitude: 0.0,
            ripple_period: 3.0,
            ripple_amplitude: 0.05,
            step_tick: 0,
            step_height: 0.0,
            off_intervals: Vec::new(),
        }
    }
}

impl StyleParams {
    pub fn new(style: Style, peak_tick: usize, amplitude: f64) -> Self {
        Self { style, peak_tick, amplitude, ..Self::default() }
    }
}

fn hump(p: &StyleParams, horizon: usize, t: usize) -> f64 {
    let phase = 2.0 * PI * (t as f64 - p.peak_tick as f64) / horizon as f64;
    1.0 + p.amplitude * phase.cos()
}

/// Dimensionless multiplier series of length `horizon` for one load or unit.
/// Values are floored at a small positive level, except unit-commitment off
/// intervals which are exactly 0.
pub fn style_profile(p: &StyleParams, horizon: usize, seed: u64) -> Vec<f64> {
    let mut rng = SimRng::new(seed);
    let mut out: Vec<f64> = match p.style {
        Style::Constant | Style::GenConstant => vec![1.0; horizon],
        Style::Smooth => (0..horizon).map(|t| hump(p, horizon, t)).collect(),
        Style::Oscillating => {
            let phase = rng.uniform_range(0.0, 2.0 * PI);
            (0..horizon)
                .map(|t| {
                    let ripple = (2.0 * PI * t as f64 / p.ripple_period + phase).sin();
                    hump(p, horizon, t) + p.ripple_amplitude * (ripple + 0.5 * rng.normal())
                })
                .collect()
        }
        Style::Abrupt => (0..horizon)
            .map(|t| hump(p, horizon, t) + if t >= p.step_tick { p.step_height } else { 0.0 })
            .collect(),
        Style::GenRamping => {
            let span = p.peak_tick.max(horizon.saturating_sub(1) - p.peak_tick.min(horizon - 1)).max(1) as f64;
            (0..horizon)
                .map(|t| {
                    let d = (t as f64 - p.peak_tick as f64).abs() / span;
                    1.0 - p.amplitude + 2.0 * p.amplitude * (1.0 - d)
                })
                .collect()
        }
        Style::GenUnitCommit => (0..horizon).map(|t| hump(p, horizon, t)).collect(),
    };
    for v in &mut out {
        *v = v.max(LOAD_FLOOR);
    }
    if p.style == Style::GenUnitCommit {
        for &(start, end) in &p.off_intervals {
            for v in out.iter_mut().take(end.min(horizon)).skip(start) {
                *v = 0.0;
            }
        }
    }
    out
}

/// How a population of load profiles is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationConfig {
    pub n_loads: usize,
    pub horizon: usize,
    /// Style mix as relative weights.
    pub styles: Vec<(LoadStyle, f64)>,
    pub amplitude: (f64, f64),
    pub ripple_amplitude: (f64, f64),
    pub step_height: (f64, f64),
    /// Relative weight per tick for the peak time; empty means uniform.
    pub peak_weights: Vec<f64>,
    /// Multiplicative Gaussian noise on every tick.
    pub noise_sigma: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self::default_mixed()
    }
}

impl PopulationConfig {
    /// One day at half-hour resolution, all loads smooth.
    pub fn default_smooth() -> Self {
        Self {
            n_loads: 1000,
            horizon: 48,
            styles: vec![(LoadStyle::Smooth, 1.0)],
            amplitude: (0.05, 0.4),
            ripple_amplitude: (0.02, 0.1),
            step_height: (-0.3, 0.3),
            peak_weights: Vec::new(),
            noise_sigma: 0.01,
        }
    }

    pub fn default_mixed() -> Self {
        Self {
            styles: vec![
                (LoadStyle::Constant, 0.25),
                (LoadStyle::Smooth, 0.5),
                (LoadStyle::Oscillating, 0.1),
                (LoadStyle::Abrupt, 0.15),
            ],
            ..Self::default_smooth()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub style: LoadStyle,
    pub params: StyleParams,
    pub series: Vec<f64>,
}

fn pick_weighted(rng: &mut SimRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.uniform() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

pub fn generate_population(cfg: &PopulationConfig, seed: u64) -> Vec<LoadProfile> {
    let mut rng = SimRng::derive(seed, 0x706f_70);
    let style_w: Vec<f64> = cfg.styles.iter().map(|s| s.1).collect();
    (0..cfg.n_loads)
        .map(|k| {
            let style = cfg.styles[pick_weighted(&mut rng, &style_w)].0;
            let peak_tick = if cfg.peak_weights.is_empty() {
                rng.below(cfg.horizon)
            } else {
                pick_weighted(&mut rng, &cfg.peak_weights)
            };
            let mut params = StyleParams::new(style.into(), peak_tick, 0.0);
            if style != LoadStyle::Constant {
                params.amplitude = rng.uniform_range(cfg.amplitude.0, cfg.amplitude.1);
            }
            params.ripple_amplitude = rng.uniform_range(cfg.ripple_amplitude.0, cfg.ripple_amplitude.1);
            params.step_tick = rng.below(cfg.horizon);
            params.step_height = rng.uniform_range(cfg.step_height.0, cfg.step_height.1);
            let mut series = style_profile(&params, cfg.horizon, SimRng::derive(seed, k as u64).next_u64());
            if cfg.noise_sigma > 0.0 {
                for v in &mut series {
                    *v = (*v * (1.0 + cfg.noise_sigma * rng.normal())).max(LOAD_FLOOR);
                }
            }
            LoadProfile { style, params, series }
        })
        .collect()
}
