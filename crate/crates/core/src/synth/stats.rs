/// Largest change over any `interval`-tick window, relative to the series max.
pub fn max_relative_delta(series: &[f64], interval: usize) -> f64 {
    let max = series.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 || series.len() <= interval {
        return 0.0;
    }
    series
        .iter()
        .zip(&series[interval..])
        .map(|(a, b)| (b - a).abs())
        .fold(0.0, f64::max)
        / max
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStats {
    pub interval: usize,
    /// Per profile, [`max_relative_delta`].
    pub max_delta: Vec<f64>,
    /// `(threshold, fraction of profiles strictly below it)`.
    pub under: Vec<(f64, f64)>,
}

pub fn delta_stats(profiles: &[Vec<f64>], interval: usize, thresholds: &[f64]) -> DeltaStats {
    let interval = interval.max(1);
    let max_delta: Vec<f64> = profiles.iter().map(|p| max_relative_delta(p, interval)).collect();
    let n = max_delta.len().max(1) as f64;
    let under = thresholds
        .iter()
        .map(|&t| (t, max_delta.iter().filter(|&&d| d < t).count() as f64 / n))
        .collect();
    DeltaStats { interval, max_delta, under }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub total: Vec<f64>,
    pub mean: f64,
    /// Extremes of the total as fractions of its mean.
    pub min_rel: f64,
    pub max_rel: f64,
}

pub fn aggregate_stats(profiles: &[Vec<f64>]) -> AggregateStats {
    let horizon = profiles.iter().map(Vec::len).max().unwrap_or(0);
    let mut total = vec![0.0; horizon];
    for p in profiles {
        for (t, v) in p.iter().enumerate() {
            total[t] += v;
        }
    }
    let mean = if horizon == 0 { 0.0 } else { total.iter().sum::<f64>() / horizon as f64 };
    let (min, max) = total.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (min_rel, max_rel) = if mean > 0.0 { (min / mean, max / mean) } else { (1.0, 1.0) };
    AggregateStats { total, mean, min_rel, max_rel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_population, style_profile, PopulationConfig, Style, StyleParams};

    #[test]
    fn constant_profiles() {
        let p = vec![vec![2.0; 48]; 5];
        let d = delta_stats(&p, 1, &[0.01, 0.08]);
        assert_eq!(d.under, vec![(0.01, 1.0), (0.08, 1.0)]);
        let a = aggregate_stats(&p);
        assert_eq!((a.min_rel, a.max_rel), (1.0, 1.0));
    }

    #[test]
    fn linear_ramp_delta() {
        let ramp: Vec<f64> = (1..=48).map(|t| t as f64 / 48.0).collect();
        for interval in [1, 2, 5] {
            let d = max_relative_delta(&ramp, interval);
            assert!((d - interval as f64 / 48.0).abs() < 1e-15);
        }
    }

    #[test]
    fn antiphase_cancels() {
        let a = style_profile(&StyleParams::new(Style::Smooth, 0, 0.3), 48, 0);
        let b = style_profile(&StyleParams::new(Style::Smooth, 24, 0.3), 48, 0);
        let s = aggregate_stats(&[a, b]);
        assert!((s.max_rel - 1.0).abs() < 1e-12 && (s.min_rel - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_populations_match_observed_bounds() {
        let smooth: Vec<Vec<f64>> = generate_population(&PopulationConfig::default_smooth(), 0)
            .into_iter()
            .map(|p| p.series)
            .collect();
        let frac = delta_stats(&smooth, 1, &[0.08]).under[0].1;
        assert!(frac >= 0.9, "{frac}");
        let mixed: Vec<Vec<f64>> = generate_population(&PopulationConfig::default_mixed(), 0)
            .into_iter()
            .map(|p| p.series)
            .collect();
        let agg = aggregate_stats(&mixed);
        assert!(agg.min_rel >= 0.92 && agg.max_rel <= 1.08, "{} {}", agg.min_rel, agg.max_rel);
    }
}
