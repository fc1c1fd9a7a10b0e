use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridrisk_acopf::{experiment_sweep, write_sweep_csv, SweepRow};
use gridrisk_core::scenario::{build_scenario, read_labeled_stream, run_scenario, write_labeled_stream, StreamFiles};
use gridrisk_core::synth::{aggregate_stats, delta_stats, generate_population, write_profiles_csv};
use gridrisk_detect::{
    run_detector, write_report_csv, write_scores_csv, AnomalyScoreSeries, DetectionReport, DetectorKind, GraphDistance,
};
use log::info;

use crate::config::RunConfig;
use crate::svg::{render_panels, LineChart, Marker, Series};

pub const ANOMALY_COLOR: &str = "red";
pub const KNOWN_CHANGE_COLOR: &str = "green";

/// Files written by a command plus the problems it ran into. Errors do not
/// abort a command when the remaining work is still meaningful.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
    pub errors: Vec<String>,
}

impl RunOutcome {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }

    /// `[outputs]`, `[notes]` and `[errors]` sections; empty ones are omitted.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut section = |name: &str, lines: Vec<String>| {
            if !lines.is_empty() {
                let _ = writeln!(s, "[{name}]");
                lines.iter().for_each(|l| {
                    let _ = writeln!(s, "{l}");
                });
            }
        };
        section("outputs", self.outputs.iter().map(|p| p.display().to_string()).collect());
        section("notes", self.notes.clone());
        section("errors", self.errors.clone());
        s
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<RunOutcome> {
    let s = &cfg.synth;
    if s.population.styles.is_empty() || s.population.horizon < 2 {
        bail!("synth population needs at least one style and a horizon of 2 or more");
    }
    prepare_out(&cfg.out)?;
    let profiles = generate_population(&s.population, s.seed);
    let series: Vec<Vec<f64>> = profiles.iter().map(|p| p.series.clone()).collect();
    let ids: Vec<String> = (0..profiles.len()).map(|k| format!("load_{k:04}")).collect();

    let mut out = RunOutcome::default();
    let profiles_path = cfg.out.join("profiles.csv");
    let mut w = create(&profiles_path)?;
    write_profiles_csv(&mut w, &ids, &series)?;
    w.flush()?;
    out.outputs.push(profiles_path);

    let interval = s.interval_ticks();
    let delta = delta_stats(&series, interval, &s.thresholds);
    let agg = aggregate_stats(&series);
    let stats_path = cfg.out.join("stats.csv");
    let mut w = csv::Writer::from_writer(create(&stats_path)?);
    w.write_record(["statistic", "parameter", "value"])?;
    w.write_record(["loads", "", &series.len().to_string()])?;
    w.write_record(["interval_ticks", "", &interval.to_string()])?;
    for (t, frac) in &delta.under {
        w.write_record(["fraction_under_delta", &t.to_string(), &frac.to_string()])?;
    }
    let max_delta = delta.max_delta.iter().cloned().fold(0.0, f64::max);
    w.write_record(["max_delta", "", &max_delta.to_string()])?;
    w.write_record(["aggregate_mean", "", &agg.mean.to_string()])?;
    w.write_record(["aggregate_min_rel", "", &agg.min_rel.to_string()])?;
    w.write_record(["aggregate_max_rel", "", &agg.max_rel.to_string()])?;
    let band = (agg.max_rel - 1.0).max(1.0 - agg.min_rel);
    w.write_record(["aggregate_band", "", &band.to_string()])?;
    w.flush()?;
    out.outputs.push(stats_path);
    for (t, frac) in &delta.under {
        out.notes.push(format!("{:.1}% of loads under a {:.0}% delta", 100.0 * frac, 100.0 * t));
    }
    out.notes.push(format!("aggregate within {:+.2}% of its mean", 100.0 * band));

    let chart = LineChart {
        title: "Aggregate load relative to its mean".into(),
        x_label: "tick".into(),
        y_label: "total / mean".into(),
        series: vec![Series {
            label: "aggregate".into(),
            points: agg.total.iter().enumerate().map(|(t, v)| (t as f64, v / agg.mean.max(f64::MIN_POSITIVE))).collect(),
        }],
        markers: vec![],
        hlines: vec![0.92, 1.08],
    };
    let svg_path = cfg.out.join("aggregate.svg");
    write_text(&svg_path, &chart.render())?;
    out.outputs.push(svg_path);
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let case = cfg.resolve_case(&cfg.simulate.case)?;
    prepare_out(&cfg.out)?;
    let scenario = build_scenario(&case, &cfg.simulate.scenario)?;
    info!("simulating {} ticks on {}", cfg.simulate.scenario.horizon, cfg.simulate.case);
    let stream = run_scenario(&scenario)?;
    let files = StreamFiles::in_dir(&cfg.out);
    write_labeled_stream(&stream, &files)?;
    let distinct: BTreeSet<usize> = stream.topology_id_per_tick.iter().copied().collect();
    Ok(RunOutcome {
        outputs: vec![files.stream, files.labels, files.topology, files.topologies],
        notes: vec![
            format!("{} ticks, {} sensors", stream.len(), stream.sensors.len()),
            format!("{} distinct topologies, {} used for fitting", distinct.len(), stream.train_topologies),
            format!(
                "{} known changes, {} anomalies",
                stream.known_change_ticks.len(),
                stream.anomaly_ticks.len()
            ),
        ],
        errors: vec![],
    })
}

/// Paths of the stream export that `detect` reads.
pub fn detect_inputs(cfg: &RunConfig) -> StreamFiles {
    let stream = cfg.detect.stream.clone().unwrap_or_else(|| cfg.out.join("stream.csv"));
    let dir = stream.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut files = StreamFiles::in_dir(&dir);
    files.labels = cfg.detect.labels.clone().unwrap_or(files.labels);
    files.stream = stream;
    files
}

fn score_panels(series: &[AnomalyScoreSeries], known: &BTreeSet<usize>, anomalies: &BTreeSet<usize>) -> Vec<LineChart> {
    let markers: Vec<Marker> = known
        .iter()
        .map(|&t| Marker { x: t as f64, color: KNOWN_CHANGE_COLOR })
        .chain(anomalies.iter().map(|&t| Marker { x: t as f64, color: ANOMALY_COLOR }))
        .collect();
    series
        .iter()
        .map(|s| LineChart {
            title: format!("{} anomaly score", s.detector),
            x_label: "tick".into(),
            y_label: "score".into(),
            series: vec![Series {
                label: s.detector.name().into(),
                points: s.scores.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t as f64, v))).collect(),
            }],
            markers: markers.clone(),
            hlines: if s.threshold.is_finite() { vec![s.threshold] } else { vec![] },
        })
        .collect()
}

pub fn cmd_detect(cfg: &RunConfig) -> Result<RunOutcome> {
    let kinds = cfg.detect.kinds()?;
    cfg.detect.config.validate()?;
    let files = detect_inputs(cfg);
    let stream = read_labeled_stream(&files)?;
    prepare_out(&cfg.out)?;
    let graph = if kinds.contains(&DetectorKind::Topo) {
        let case = cfg.resolve_case(&cfg.detect.case)?;
        Some(GraphDistance::new(&case)?)
    } else {
        None
    };

    let mut out = RunOutcome::default();
    let mut series = Vec::new();
    for kind in kinds {
        info!("running {kind}");
        match run_detector(kind, &stream, &cfg.detect.config, graph.as_ref()) {
            Ok(s) => series.push(s),
            Err(e) => out.errors.push(format!("{kind}: {e}")),
        }
    }
    let report = DetectionReport::new(cfg.detect.tolerance, &series, &stream);
    for r in &report.rows {
        out.notes.push(format!(
            "{}: {} false positives at known changes, {} elsewhere, {}/{} anomalies detected",
            r.detector,
            r.fp_known_change,
            r.fp_other,
            r.true_positives,
            r.true_positives + r.missed
        ));
    }

    let report_path = cfg.out.join("report.csv");
    let mut w = create(&report_path)?;
    write_report_csv(&mut w, &report)?;
    w.flush()?;
    let scores_path = cfg.out.join("scores.csv");
    let mut w = create(&scores_path)?;
    write_scores_csv(&mut w, &series)?;
    w.flush()?;
    let svg_path = cfg.out.join("scores.svg");
    write_text(&svg_path, &render_panels(&score_panels(&series, &stream.known_change_ticks, &stream.anomaly_ticks)))?;
    out.outputs.extend([report_path, scores_path, svg_path]);
    Ok(out)
}

fn sweep_chart(rows: &[SweepRow]) -> LineChart {
    let mut by_mode: BTreeMap<&'static str, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        by_mode.entry(r.mode.name()).or_default().entry(r.n_fake).or_default().push(r.overall_mean);
    }
    LineChart {
        title: "Generalization of the ACOPF surrogate to realistic loads".into(),
        x_label: "augmented samples".into(),
        y_label: "mean constraint violation".into(),
        series: by_mode
            .into_iter()
            .map(|(mode, cells)| Series {
                label: mode.into(),
                points: cells.into_iter().map(|(n, v)| (n as f64, v.iter().sum::<f64>() / v.len() as f64)).collect(),
            })
            .collect(),
        markers: vec![],
        hlines: vec![],
    }
}

pub fn cmd_acopf(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.acopf.validate()?;
    let case = cfg.resolve_case(&cfg.acopf.case)?;
    prepare_out(&cfg.out)?;
    let result = experiment_sweep(&case, &cfg.acopf)?;
    let mut out = RunOutcome::default();

    let sweep_path = cfg.out.join("sweep.csv");
    let mut w = create(&sweep_path)?;
    write_sweep_csv(&mut w, &result.rows)?;
    w.flush()?;

    let summary_path = cfg.out.join("sweep_summary.csv");
    let mut w = csv::Writer::from_writer(create(&summary_path)?);
    w.write_record(["mode", "n_fake", "runs", "mean", "spread"])?;
    for c in result.summary() {
        w.write_record([c.mode.name().to_string(), c.n_fake.to_string(), c.runs.to_string(), c.mean.to_string(), c.spread.to_string()])?;
        out.notes.push(format!("{} n_fake={}: mean violation {:.4e} over {} runs", c.mode.name(), c.n_fake, c.mean, c.runs));
    }
    w.flush()?;

    let failures_path = cfg.out.join("failures.csv");
    let mut w = csv::Writer::from_writer(create(&failures_path)?);
    w.write_record(["mode", "n_fake", "seed", "error"])?;
    for f in &result.failures {
        w.write_record([f.mode.name().to_string(), f.n_fake.to_string(), f.seed.to_string(), f.error.clone()])?;
        out.errors.push(format!("cell {} n_fake={} seed={}: {}", f.mode.name(), f.n_fake, f.seed, f.error));
    }
    w.flush()?;

    let svg_path = cfg.out.join("sweep.svg");
    write_text(&svg_path, &sweep_chart(&result.rows).render())?;
    out.outputs.extend([sweep_path, summary_path, failures_path, svg_path]);
    Ok(out)
}

fn existing(explicit: &Option<PathBuf>, fallback: PathBuf) -> Option<PathBuf> {
    match explicit {
        Some(p) => Some(p.clone()),
        None => fallback.exists().then_some(fallback),
    }
}

fn read_labels(path: &Path) -> Result<(BTreeSet<usize>, BTreeSet<usize>)> {
    let mut known = BTreeSet::new();
    let mut anomalies = BTreeSet::new();
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    for rec in r.records() {
        let rec = rec?;
        let tick: usize = rec[0].parse().with_context(|| format!("{}: bad tick '{}'", path.display(), &rec[0]))?;
        match &rec[1] {
            "known_change" => known.insert(tick),
            "anomaly" => anomalies.insert(tick),
            other => bail!("{}: unknown label '{other}'", path.display()),
        };
    }
    Ok((known, anomalies))
}

fn read_scores(path: &Path) -> Result<Vec<AnomalyScoreSeries>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut by_kind: BTreeMap<DetectorKind, Vec<(usize, f64, bool)>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let kind: DetectorKind = rec[1].parse()?;
        let bad = || format!("{}: malformed row {:?}", path.display(), rec);
        by_kind.entry(kind).or_default().push((
            rec[0].parse().with_context(bad)?,
            rec[2].parse().with_context(bad)?,
            &rec[3] == "1",
        ));
    }
    Ok(by_kind
        .into_iter()
        .map(|(detector, rows)| {
            let len = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
            let mut scores = vec![None; len];
            let mut flags = vec![false; len];
            for (t, v, f) in rows {
                scores[t] = Some(v);
                flags[t] = f;
            }
            AnomalyScoreSeries { detector, scores, flags, threshold: f64::NAN }
        })
        .collect())
}

/// Re-renders plots and a markdown summary from earlier `acopf` and
/// `detect` outputs.
pub fn cmd_report(cfg: &RunConfig) -> Result<RunOutcome> {
    let r = &cfg.report;
    let sweep = existing(&r.sweep, cfg.out.join("sweep.csv"));
    let scores = existing(&r.scores, cfg.out.join("scores.csv"));
    if sweep.is_none() && scores.is_none() {
        bail!("nothing to report: no sweep.csv or scores.csv in {}", cfg.out.display());
    }
    prepare_out(&cfg.out)?;
    let mut out = RunOutcome::default();
    let mut md = String::from("# gridrisk report\n");

    if let Some(path) = sweep {
        let mut rdr = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
        let rows: Vec<SweepRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        md.push_str("\n## ACOPF sweep\n\n| mode | n_fake | runs | mean violation |\n|---|---|---|---|\n");
        let mut cells: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
        let mut modes: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for row in &rows {
            cells.entry((row.mode.name(), row.n_fake)).or_default().push(row.overall_mean);
            modes.entry(row.mode.name()).or_default().push(row.overall_mean);
        }
        for ((mode, n), v) in &cells {
            let _ = writeln!(md, "| {mode} | {n} | {} | {:.4e} |", v.len(), v.iter().sum::<f64>() / v.len() as f64);
        }
        md.push('\n');
        for (mode, v) in &modes {
            let _ = writeln!(md, "- {mode}: aggregate mean {:.4e}", v.iter().sum::<f64>() / v.len() as f64);
        }
        let svg = cfg.out.join("report_sweep.svg");
        write_text(&svg, &sweep_chart(&rows).render())?;
        out.outputs.push(svg);
    }

    if let Some(path) = scores {
        let series = read_scores(&path)?;
        let labels = existing(&r.labels, cfg.out.join("labels.csv"));
        let (known, anomalies) = match &labels {
            Some(l) => read_labels(l)?,
            None => {
                out.notes.push("no labels file; score plots carry no event markers".into());
                Default::default()
            }
        };
        let tol = cfg.detect.tolerance;
        let near = |t: usize, set: &BTreeSet<usize>| set.iter().any(|&s| t >= s && t <= s + tol);
        md.push_str("\n## Detection\n\n| detector | scored ticks | flags | flags near known changes | anomalies flagged |\n|---|---|---|---|---|\n");
        for s in &series {
            let flagged: Vec<usize> = (0..s.flags.len()).filter(|&t| s.flags[t]).collect();
            let at_known = flagged.iter().filter(|&&t| near(t, &known) && !near(t, &anomalies)).count();
            let hit = anomalies.iter().filter(|&&a| flagged.iter().any(|&t| t >= a && t <= a + tol)).count();
            let _ = writeln!(
                md,
                "| {} | {} | {} | {at_known} | {hit}/{} |",
                s.detector,
                s.scores.iter().flatten().count(),
                flagged.len(),
                anomalies.len()
            );
        }
        let svg = cfg.out.join("report_scores.svg");
        write_text(&svg, &render_panels(&score_panels(&series, &known, &anomalies)))?;
        out.outputs.push(svg);
    }

    let md_path = cfg.out.join("report.md");
    write_text(&md_path, &md)?;
    out.outputs.push(md_path);
    Ok(out)
}
