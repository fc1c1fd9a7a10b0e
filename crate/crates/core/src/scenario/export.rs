use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::{LabeledStream, MeasurementFrame, Sensor, SensorKind};
use super::{Result, ScenarioError, TopologySignature};

/// Locations of the CSV files that make up an exported stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFiles {
    /// `tick,sensor,type,value,sigma`
    pub stream: PathBuf,
    /// `tick,label` with label `anomaly` or `known_change`
    pub labels: PathBuf,
    /// `tick,topology_id,split`
    pub topology: PathBuf,
    /// `topology_id,element,id` listing open branches, merged switches and
    /// offline generators per topology
    pub topologies: PathBuf,
}

impl StreamFiles {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        Self {
            stream: d.join("stream.csv"),
            labels: d.join("labels.csv"),
            topology: d.join("topology.csv"),
            topologies: d.join("topologies.csv"),
        }
    }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Ok(csv::Reader::from_reader(f))
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_labeled_stream(s: &LabeledStream, files: &StreamFiles) -> Result<()> {
    let mut w = create(&files.stream)?;
    w.write_record(["tick", "sensor", "type", "value", "sigma"])?;
    for f in &s.frames {
        for ((sensor, v), sigma) in s.sensors.iter().zip(&f.values).zip(&f.sigmas) {
            w.write_record([
                f.tick.to_string(),
                sensor.element.to_string(),
                sensor.kind.name().to_string(),
                v.to_string(),
                sigma.to_string(),
            ])?;
        }
    }
    finish(w)?;

    let mut w = create(&files.labels)?;
    w.write_record(["tick", "label"])?;
    let mut labels: Vec<(usize, &str)> = s.anomaly_ticks.iter().map(|&t| (t, "anomaly")).collect();
    labels.extend(s.known_change_ticks.iter().map(|&t| (t, "known_change")));
    labels.sort_unstable();
    for (t, l) in labels {
        w.write_record([t.to_string(), l.to_string()])?;
    }
    finish(w)?;

    let mut w = create(&files.topology)?;
    w.write_record(["tick", "topology_id", "split"])?;
    for (t, id) in s.topology_id_per_tick.iter().enumerate() {
        let split = if *id < s.train_topologies { "train" } else { "test" };
        w.write_record([t.to_string(), id.to_string(), split.to_string()])?;
    }
    finish(w)?;

    let mut w = create(&files.topologies)?;
    w.write_record(["topology_id", "element", "id"])?;
    for (k, sig) in s.topologies.iter().enumerate() {
        let rows = sig
            .open_branches
            .iter()
            .map(|id| ("branch", id))
            .chain(sig.merged_switches.iter().map(|id| ("switch", id)))
            .chain(sig.offline_generators.iter().map(|id| ("generator", id)));
        for (el, id) in rows {
            w.write_record([k.to_string(), el.to_string(), id.to_string()])?;
        }
    }
    finish(w)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ScenarioError::Data(format!("{}: bad field {} in {:?}", path.display(), i, rec)))
}

pub fn read_labeled_stream(files: &StreamFiles) -> Result<LabeledStream> {
    let mut sensors: Vec<Sensor> = Vec::new();
    let mut slot: BTreeMap<Sensor, usize> = BTreeMap::new();
    let mut frames: Vec<MeasurementFrame> = Vec::new();
    for rec in open(&files.stream)?.records() {
        let rec = rec?;
        let tick: usize = field(&rec, 0, &files.stream)?;
        let element: u32 = field(&rec, 1, &files.stream)?;
        let kind = rec
            .get(2)
            .and_then(SensorKind::parse)
            .ok_or_else(|| ScenarioError::Data(format!("unknown sensor type in {rec:?}")))?;
        let value: f64 = field(&rec, 3, &files.stream)?;
        let sigma: f64 = if rec.len() > 4 { field(&rec, 4, &files.stream)? } else { 0.0 };
        if tick == frames.len() {
            frames.push(MeasurementFrame { tick, values: Vec::new(), sigmas: Vec::new() });
        } else if tick + 1 != frames.len() {
            return Err(ScenarioError::Data(format!("tick {tick} out of order")));
        }
        let sensor = Sensor { element, kind };
        if tick == 0 {
            slot.insert(sensor, sensors.len());
            sensors.push(sensor);
        } else if slot.get(&sensor) != Some(&frames[tick].values.len()) {
            return Err(ScenarioError::Data(format!("sensor roster differs at tick {tick}")));
        }
        frames[tick].values.push(value);
        frames[tick].sigmas.push(sigma);
    }
    if frames.iter().any(|f| f.values.len() != sensors.len()) {
        return Err(ScenarioError::Data("incomplete frame".into()));
    }

    let mut anomaly_ticks = BTreeSet::new();
    let mut known_change_ticks = BTreeSet::new();
    for rec in open(&files.labels)?.records() {
        let rec = rec?;
        let t: usize = field(&rec, 0, &files.labels)?;
        match rec.get(1) {
            Some("anomaly") => anomaly_ticks.insert(t),
            Some("known_change") => known_change_ticks.insert(t),
            other => return Err(ScenarioError::Data(format!("unknown label {other:?}"))),
        };
    }

    let mut topology_id_per_tick = Vec::new();
    let mut train_topologies = 0;
    for rec in open(&files.topology)?.records() {
        let rec = rec?;
        let id: usize = field(&rec, 1, &files.topology)?;
        if rec.get(2) == Some("train") {
            train_topologies = train_topologies.max(id + 1);
        }
        topology_id_per_tick.push(id);
    }
    let n_topo = topology_id_per_tick.iter().max().map_or(0, |m| m + 1);
    let mut topologies = vec![TopologySignature::default(); n_topo];
    for rec in open(&files.topologies)?.records() {
        let rec = rec?;
        let k: usize = field(&rec, 0, &files.topologies)?;
        let id: u32 = field(&rec, 2, &files.topologies)?;
        let sig = topologies
            .get_mut(k)
            .ok_or_else(|| ScenarioError::Data(format!("topology {k} not used by any tick")))?;
        match rec.get(1) {
            Some("branch") => sig.open_branches.insert(id),
            Some("switch") => sig.merged_switches.insert(id),
            Some("generator") => sig.offline_generators.insert(id),
            other => return Err(ScenarioError::Data(format!("unknown element {other:?}"))),
        };
    }
    if topology_id_per_tick.len() != frames.len() {
        return Err(ScenarioError::Data("topology file does not cover every tick".into()));
    }
    Ok(LabeledStream {
        sensors,
        frames,
        anomaly_ticks,
        known_change_ticks,
        topology_id_per_tick,
        train_topologies,
        topologies,
    })
}
