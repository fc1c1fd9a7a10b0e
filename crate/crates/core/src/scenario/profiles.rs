use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Result;
use crate::grid::{GridCase, LoadStyle};
use crate::rng::SimRng;
use crate::synth::{decompose_trace, style_profile, synthesize_trace, Style, StyleParams};

/// Half-hourly samples in one day.
pub const DAY_SAMPLES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadVariant {
    /// Every load follows one shared, mildly varying profile.
    Small,
    /// Loads follow their group's style with its own peak time and large swings.
    Realistic,
}

/// A system-level daily curve with morning and evening peaks (about +/-8%
/// around the mean) and 1% multiplicative noise, at half-hour resolution.
pub fn reference_day_trace(seed: u64) -> Vec<f64> {
    let mut rng = SimRng::derive(seed, 0x6461_79);
    (0..DAY_SAMPLES)
        .map(|k| {
            let h = k as f64 * 24.0 / DAY_SAMPLES as f64;
            let shape = 1.0 + 0.05 * (2.0 * PI * (h - 18.0) / 24.0).cos() + 0.03 * (4.0 * PI * (h - 8.0) / 24.0).cos();
            shape * (1.0 + 0.01 * rng.normal())
        })
        .collect()
}

/// Daily half-hourly trace for a load group of the given style.
pub fn group_day_trace(params: &StyleParams, seed: u64) -> Vec<f64> {
    let mut rng = SimRng::derive(seed, 0x6772_70);
    style_profile(params, DAY_SAMPLES, rng.next_u64())
        .into_iter()
        .map(|v| v * (1.0 + 0.01 * rng.normal()))
        .collect()
}

/// Style parameters for every load group, drawn from the style of the
/// group's first load: peak half-hour uniform over the day, relative
/// amplitude `amplitude`, abrupt steps of height `amplitude` with random
/// sign at a random half-hour.
pub fn group_styles(case: &GridCase, amplitude: f64, seed: u64) -> Vec<(u32, StyleParams)> {
    let mut rng = SimRng::derive(seed, 0x7374_796c);
    case.load_groups()
        .into_iter()
        .map(|g| {
            let style = case.loads.iter().find(|l| l.group == g).map_or(LoadStyle::Smooth, |l| l.style);
            let mut p = StyleParams::new(Style::from(style), rng.below(DAY_SAMPLES), amplitude);
            if style == LoadStyle::Constant {
                p.amplitude = 0.0;
            }
            p.step_tick = rng.below(DAY_SAMPLES);
            p.step_height = if rng.uniform() < 0.5 { -amplitude } else { amplitude };
            p.ripple_amplitude = 0.5 * amplitude;
            (g, p)
        })
        .collect()
}

/// Per-load multiplier series of length `horizon`, obtained by decomposing a
/// daily trace and re-synthesizing it at tick resolution with scaling `alpha`.
pub fn load_multipliers(
    case: &GridCase,
    variant: LoadVariant,
    horizon: usize,
    alpha: f64,
    amplitude: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    match variant {
        LoadVariant::Small => {
            let comp = decompose_trace(&reference_day_trace(seed), 5)?;
            let shared: Vec<f64> = synthesize_trace(&comp, horizon, alpha, SimRng::derive(seed, 1).next_u64())?
                .into_iter()
                .map(|v| v / comp.mu)
                .collect();
            Ok(vec![shared; case.loads.len()])
        }
        LoadVariant::Realistic => {
            let styles = group_styles(case, amplitude, seed);
            let mut comps = Vec::new();
            for (g, p) in &styles {
                comps.push((*g, decompose_trace(&group_day_trace(p, seed ^ u64::from(*g)), 5)?));
            }
            case.loads
                .iter()
                .map(|l| {
                    let comp = &comps.iter().find(|(g, _)| *g == l.group).expect("group present").1;
                    let noise_seed = SimRng::derive(seed, 0x1_0000 + u64::from(l.id)).next_u64();
                    Ok(synthesize_trace(comp, horizon, alpha, noise_seed)?.into_iter().map(|v| v / comp.mu).collect())
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::bundled_case;

    #[test]
    fn small_variant_is_shared() {
        let case = bundled_case("case30").unwrap();
        let m = load_multipliers(&case, LoadVariant::Small, 100, 0.5, 0.3, 4).unwrap();
        assert_eq!(m.len(), case.loads.len());
        assert!(m.iter().all(|s| s == &m[0] && s.len() == 100));
        let mean = m[0].iter().sum::<f64>() / 100.0;
        assert!((mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn realistic_variant_differs_between_groups() {
        let case = bundled_case("case30").unwrap();
        let m = load_multipliers(&case, LoadVariant::Realistic, 200, 1.0, 0.3, 4).unwrap();
        let a = case.loads.iter().position(|l| l.group == 0).unwrap();
        let b = case.loads.iter().position(|l| l.group == 1).unwrap();
        let spread = |s: &Vec<f64>| s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min);
        assert_ne!(m[a], m[b]);
        assert!(m.iter().all(|s| s.iter().all(|&v| v > 0.0)));
        assert!(m.iter().map(spread).fold(0.0, f64::max) > 0.2);
    }
}
