use std::io::Write;

use gridrisk_core::scenario::LabeledStream;
use serde::Serialize;

use crate::{AnomalyScoreSeries, Result};

/// Detection counts of one detector over the test ticks of a stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorOutcome {
    pub detector: String,
    pub threshold: f64,
    /// Flagged ticks within `[k, k + tolerance]` of a known change `k`.
    pub fp_known_change: usize,
    /// Flagged ticks outside every known-change and anomaly window.
    pub fp_other: usize,
    /// Flagged ticks within `[a, a + tolerance]` of an anomaly `a`.
    pub anomaly_window_flags: usize,
    /// Anomalies with at least one flag in their window.
    pub true_positives: usize,
    pub missed: usize,
    pub scored_ticks: usize,
    pub flagged_ticks: usize,
}

impl DetectorOutcome {
    pub fn false_positives(&self) -> usize {
        self.fp_known_change + self.fp_other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub tolerance: usize,
    pub rows: Vec<DetectorOutcome>,
}

impl DetectionReport {
    pub fn new(tolerance: usize, series: &[AnomalyScoreSeries], stream: &LabeledStream) -> Self {
        Self { tolerance, rows: series.iter().map(|s| evaluate(s, stream, tolerance)).collect() }
    }

    pub fn row(&self, detector: &str) -> Option<&DetectorOutcome> {
        self.rows.iter().find(|r| r.detector == detector)
    }
}

/// Counts flags on test ticks. A flag inside an anomaly window is never a
/// false positive, even when the window overlaps a known change.
pub fn evaluate(series: &AnomalyScoreSeries, stream: &LabeledStream, tolerance: usize) -> DetectorOutcome {
    let test: Vec<usize> = stream.test_ticks();
    let in_window = |t: usize, starts: &[usize]| starts.iter().any(|&s| t >= s && t <= s + tolerance);
    let anomalies: Vec<usize> = stream.anomaly_ticks.iter().copied().filter(|&a| !stream.is_train(a)).collect();
    let known: Vec<usize> = stream.known_change_ticks.iter().copied().filter(|&k| !stream.is_train(k)).collect();
    let mut out = DetectorOutcome {
        detector: series.detector.name().to_string(),
        threshold: series.threshold,
        fp_known_change: 0,
        fp_other: 0,
        anomaly_window_flags: 0,
        true_positives: 0,
        missed: 0,
        scored_ticks: test.iter().filter(|&&t| series.scores[t].is_some()).count(),
        flagged_ticks: 0,
    };
    for &t in &test {
        if !series.flags[t] {
            continue;
        }
        out.flagged_ticks += 1;
        if in_window(t, &anomalies) {
            out.anomaly_window_flags += 1;
        } else if in_window(t, &known) {
            out.fp_known_change += 1;
        } else {
            out.fp_other += 1;
        }
    }
    for &a in &anomalies {
        let hit = (a..=a + tolerance).any(|t| t < series.flags.len() && series.flags[t]);
        if hit {
            out.true_positives += 1;
        } else {
            out.missed += 1;
        }
    }
    out
}

/// `tick,detector,score,flag` for every scored tick.
pub fn write_scores_csv<W: Write>(out: W, series: &[AnomalyScoreSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tick", "detector", "score", "flag"])?;
    for s in series {
        for (t, (score, flag)) in s.scores.iter().zip(&s.flags).enumerate() {
            if let Some(v) = score {
                w.write_record([t.to_string(), s.detector.name().to_string(), v.to_string(), u8::from(*flag).to_string()])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_report_csv<W: Write>(out: W, report: &DetectionReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    if report.rows.is_empty() {
        w.write_record([
            "detector",
            "threshold",
            "fp_known_change",
            "fp_other",
            "anomaly_window_flags",
            "true_positives",
            "missed",
            "scored_ticks",
            "flagged_ticks",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
