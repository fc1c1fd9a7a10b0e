use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridrisk_acopf::ExperimentConfig;
use gridrisk_core::grid::{bundled_case, bundled_case_names, load_case_file, GridCase};
use gridrisk_core::scenario::ScenarioConfig;
use gridrisk_core::synth::PopulationConfig;
use gridrisk_detect::{DetectorConfig, DetectorKind};
use serde::{Deserialize, Serialize};

/// Environment variable naming the directory searched for `<case>.toml`.
pub const CASE_DIR_ENV: &str = "GRIDRISK_CASE_DIR";

/// One run's configuration file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces the seed of whichever section the command uses.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub case_dir: Option<PathBuf>,
    pub synth: SynthSection,
    pub simulate: SimulateSection,
    pub detect: DetectSection,
    pub acopf: ExperimentConfig,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            case_dir: None,
            synth: SynthSection::default(),
            simulate: SimulateSection::default(),
            detect: DetectSection::default(),
            acopf: ExperimentConfig::default(),
            report: ReportSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    /// Window of the step-change statistics, in hours of a 24 h horizon.
    pub interval_hours: f64,
    pub thresholds: Vec<f64>,
    pub population: PopulationConfig,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            seed: 0,
            interval_hours: 0.5,
            thresholds: vec![0.01, 0.02, 0.05, 0.08, 0.1, 0.2],
            population: PopulationConfig::default_mixed(),
        }
    }
}

impl SynthSection {
    pub fn interval_ticks(&self) -> usize {
        let tick_hours = 24.0 / self.population.horizon.max(1) as f64;
        ((self.interval_hours / tick_hours).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub case: String,
    pub scenario: ScenarioConfig,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { case: "case30".into(), scenario: ScenarioConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    /// Case the stream was simulated on; the topology-aware detector needs it.
    pub case: String,
    /// Defaults to `<out>/stream.csv`. `topology.csv` and `topologies.csv`
    /// are read from the same directory.
    pub stream: Option<PathBuf>,
    /// Defaults to `labels.csv` next to the stream.
    pub labels: Option<PathBuf>,
    pub detectors: Vec<String>,
    /// Ticks after an event within which a flag still counts for it.
    pub tolerance: usize,
    pub config: DetectorConfig,
}

impl Default for DetectSection {
    fn default() -> Self {
        Self {
            case: "case30".into(),
            stream: None,
            labels: None,
            detectors: DetectorKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            tolerance: 2,
            config: DetectorConfig::default(),
        }
    }
}

impl DetectSection {
    pub fn kinds(&self) -> Result<Vec<DetectorKind>> {
        self.detectors.iter().map(|n| n.parse::<DetectorKind>().map_err(Into::into)).collect()
    }
}

/// Inputs of `report`; unset paths default to the command outputs in `out`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub sweep: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Command-line values win over file values.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>, case_dir: Option<PathBuf>) {
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.out = out;
        }
        if case_dir.is_some() {
            self.case_dir = case_dir;
        }
        if let Some(s) = self.seed {
            self.synth.seed = s;
            self.simulate.scenario.seed = s;
            self.detect.config.iforest.seed = s;
            self.acopf.seeds = vec![s];
        }
    }

    /// `<case_dir>/<name>.toml` when it exists, else the bundled fixture.
    pub fn resolve_case(&self, name: &str) -> Result<GridCase> {
        if let Some(dir) = &self.case_dir {
            let path = dir.join(format!("{name}.toml"));
            if path.exists() {
                return load_case_file(&path).with_context(|| format!("loading case {}", path.display()));
            }
        }
        if bundled_case_names().contains(&name) {
            return Ok(bundled_case(name)?);
        }
        match &self.case_dir {
            Some(dir) => bail!("case '{name}' not found in {} and not bundled", dir.display()),
            None => bail!("case '{name}' is not bundled (set {CASE_DIR_ENV} or case_dir)"),
        }
    }
}
