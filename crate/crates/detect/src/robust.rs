//! Median/MAD helpers, plain and weighted.

/// Consistency factor turning a MAD into a Gaussian standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    median(&values.iter().map(|v| (v - m).abs()).collect::<Vec<_>>())
}

/// `median + z * 1.4826 * MAD`; the MAD is floored so that a constant
/// score series still yields a finite threshold just above its value.
pub fn robust_threshold(values: &[f64], z: f64) -> Option<f64> {
    let m = median(values)?;
    let d = mad(values)?.max(1e-12 * m.abs().max(1.0));
    Some(m + z * MAD_SCALE * d)
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half of the total. `pairs` is reordered.
pub fn weighted_median(pairs: &mut [(f64, f64)]) -> Option<f64> {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || total <= 0.0 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for &(v, w) in pairs.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return Some(v);
        }
    }
    pairs.last().map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), Some(1.0));
    }

    #[test]
    fn weighted_median_matches_expansion() {
        // Integer weights equal repeating each value.
        let mut p = vec![(5.0, 1.0), (1.0, 3.0), (3.0, 1.0)];
        assert_eq!(weighted_median(&mut p), Some(1.0));
        let mut p = vec![(5.0, 3.0), (1.0, 1.0), (3.0, 1.0)];
        assert_eq!(weighted_median(&mut p), Some(5.0));
        let mut p = vec![(2.0, 1.0), (1.0, 1.0)];
        assert_eq!(weighted_median(&mut p), Some(1.0));
        assert_eq!(weighted_median(&mut []), None);
    }

    #[test]
    fn constant_scores_have_finite_threshold() {
        let t = robust_threshold(&[2.0; 10], 3.0).unwrap();
        assert!(t > 2.0 && t < 2.0 + 1e-9);
    }
}
