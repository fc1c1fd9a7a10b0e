//! Load and generation profile synthesis, spatial scaling and summary statistics.

mod scaling;
mod stats;
mod style;
mod trace;

use std::io::Write;

use thiserror::Error;

pub use scaling::{scale_factors, scale_loads, ScalingMode};
pub use stats::{aggregate_stats, delta_stats, max_relative_delta, AggregateStats, DeltaStats};
pub use style::{generate_population, style_profile, LoadProfile, PopulationConfig, Style, StyleParams};
pub use trace::{decompose_trace, interpolate, synthesize_trace, TraceComponents};

/// Smallest value a synthesized load may take (pu).
pub const LOAD_FLOOR: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("trace value {value} at index {index} is not positive")]
    NonPositive { index: usize, value: f64 },
    #[error("window {window} invalid for trace of length {len} (need 3 <= window <= len)")]
    Window { window: usize, len: usize },
    #[error("output horizon {0} too short (need at least 2)")]
    Horizon(usize),
    #[error("grouped scaling needs a group for every load")]
    EmptyGroups,
    #[error("factor range [{0}, {1}] invalid (need 0 < lo <= hi)")]
    FactorRange(f64, f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// One column per profile headed by its id, one row per tick.
pub fn write_profiles_csv<W: Write>(out: W, ids: &[String], profiles: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ids)?;
    let horizon = profiles.iter().map(Vec::len).max().unwrap_or(0);
    for t in 0..horizon {
        w.write_record(profiles.iter().map(|p| p.get(t).map_or(String::new(), |v| v.to_string())))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Read a single-column (or first-column) numeric trace, skipping a header
/// row if it does not parse.
pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(rec.len().saturating_sub(1)).unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(SynthError::NonPositive { index: out.len(), value: f64::NAN }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_csv_layout() {
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &["1".into(), "7".into()], &[vec![1.0, 2.0], vec![0.5, 0.25]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,7\n1,0.5\n2,0.25\n");
    }

    #[test]
    fn trace_csv_round_trip() {
        let t = read_trace_csv("tick,load\n0,1.5\n1,2\n".as_bytes()).unwrap();
        assert_eq!(t, vec![1.5, 2.0]);
    }
}
