use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dpshare_core::classifiers::{ClassifierConfig, ClassifierKind};
use dpshare_core::dataset::{load_csv, ColumnRef, Fraction, HeaderMode, LoadOptions, Loaded};
use dpshare_core::evaluation::Averaging;
use dpshare_core::partition::PartitionSpec;
use dpshare_core::privacy::NoiseConfig;
use dpshare_core::protocol::Schedule;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::presets::Preset;

/// Where noise goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// No noise at all.
    Clean,
    /// Noise on the sensitive columns only.
    Ppmd,
    /// Noise on every feature column. An emulated noise-everything
    /// baseline, not a reimplementation of any published scheme.
    All,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::Clean, Placement::Ppmd, Placement::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Clean => "clean",
            Placement::Ppmd => "ppmd",
            Placement::All => "all",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Placement::Clean => "no noise",
            Placement::Ppmd => "noise on sensitive columns only",
            Placement::All => "noise on every feature column (emulated baseline)",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Placement {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clean" | "none" => Ok(Placement::Clean),
            "ppmd" | "sensitive" | "sensitive-only" => Ok(Placement::Ppmd),
            "all" | "all-columns" | "baseline" => Ok(Placement::All),
            other => Err(format!("unknown placement `{other}` (expected clean, ppmd or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AveragingMode {
    /// Binary with class 1 positive for two classes, macro otherwise.
    #[default]
    Auto,
    Macro,
    Binary { positive: usize },
}

impl AveragingMode {
    pub fn resolve(self, n_classes: usize) -> Averaging {
        match self {
            AveragingMode::Auto => Averaging::default_for(n_classes),
            AveragingMode::Macro => Averaging::Macro,
            AveragingMode::Binary { positive } => Averaging::Binary { positive },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub preset: Option<Preset>,
    pub name: Option<String>,
    /// Relative paths are taken from `data_dir`.
    pub path: Option<PathBuf>,
    /// `last`, a zero-based index or a column name.
    pub label: Option<String>,
    pub header: Option<HeaderMode>,
    pub column_names: Option<Vec<String>>,
    pub label_levels: Option<Vec<String>>,
    pub positive_labels: Option<Vec<String>>,
    pub missing_markers: Option<Vec<String>>,
    pub partition: Option<PartitionSpec>,
}

impl DatasetConfig {
    pub fn preset(p: Preset) -> Self {
        DatasetConfig { preset: Some(p), ..Default::default() }
    }

    fn resolve(&mut self) -> Result<()> {
        if let Some(p) = self.preset {
            p.apply(self);
        }
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| BenchError::Input("a dataset needs either `preset` or `path`".into()))?;
        if self.name.is_none() {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            self.name = Some(stem);
        }
        self.label.get_or_insert_with(|| "last".into());
        self.header.get_or_insert(HeaderMode::Auto);
        self.missing_markers
            .get_or_insert_with(|| vec!["?".into(), String::new()]);
        if self.partition.is_none() {
            return Err(BenchError::Input(format!(
                "dataset `{}` has no `partition` (e.g. sensitive_columns)",
                self.name()
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("")
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        self.partition.clone().unwrap_or_default()
    }

    pub fn load_options(&self) -> LoadOptions {
        let mut opts = LoadOptions::new(ColumnRef::parse(self.label.as_deref().unwrap_or("last")));
        opts.header = self.header.unwrap_or_default();
        opts.column_names = self.column_names.clone();
        opts.label_levels = self.label_levels.clone();
        opts.positive_labels = self.positive_labels.clone();
        if let Some(m) = &self.missing_markers {
            opts.missing_markers = m.clone();
        }
        opts.name = self.name.clone();
        opts
    }

    pub fn file_path(&self, data_dir: &Path) -> PathBuf {
        let p = self.path.clone().unwrap_or_default();
        if p.is_absolute() {
            p
        } else {
            data_dir.join(p)
        }
    }

    pub fn load(&self, data_dir: &Path) -> Result<Loaded<f64>> {
        let path = self.file_path(data_dir);
        if !path.is_file() {
            return Err(BenchError::MissingDataset { name: self.name().to_owned(), path });
        }
        Ok(load_csv(&path, &self.load_options())?)
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: Vec<DatasetConfig>,
    /// Falls back to `DPSHARE_DATA_DIR` on the command line, then `data`.
    pub data_dir: Option<PathBuf>,
    pub placements: Vec<Placement>,
    pub classifiers: Vec<ClassifierKind>,
    pub hyperparameters: ClassifierConfig,
    pub noise: NoiseConfig,
    pub split_fraction: Fraction,
    pub stratified: bool,
    pub master_seed: u64,
    /// One grid replicate per entry.
    pub seeds: Vec<u64>,
    pub averaging: AveragingMode,
    pub alpha: f64,
    /// Owners for `simulate`; rows are dealt out in contiguous blocks.
    pub owners: usize,
    pub schedule: Schedule,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            datasets: Preset::ALL.into_iter().map(DatasetConfig::preset).collect(),
            data_dir: None,
            placements: Placement::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            hyperparameters: ClassifierConfig::default(),
            noise: NoiseConfig::default(),
            split_fraction: Fraction::default(),
            stratified: false,
            master_seed: 0,
            seeds: default_seeds(),
            averaging: AveragingMode::Auto,
            alpha: 0.05,
            owners: 3,
            schedule: Schedule::RoundRobin,
            out_dir: PathBuf::from("dpshare-out"),
        }
    }
}

impl RunConfig {
    /// Reads TOML or JSON, chosen by extension (TOML first when unknown).
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            Some("toml") => Ok(toml::from_str(&text)?),
            _ => toml::from_str(&text).or_else(|e| serde_json::from_str(&text).map_err(|_| e.into())),
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| PathBuf::from("data"))
    }

    /// Fills every default in place and checks the grid. The result is what
    /// gets written out as the config snapshot; resolving it again is a no-op.
    pub fn resolve(&mut self) -> Result<()> {
        if self.data_dir.is_none() {
            self.data_dir = Some(self.data_dir());
        }
        for d in &mut self.datasets {
            d.resolve()?;
        }
        let check_unique = |what: &str, items: Vec<String>| -> Result<()> {
            if items.is_empty() {
                return Err(BenchError::Input(format!("no {what} selected")));
            }
            let set: BTreeSet<&String> = items.iter().collect();
            if set.len() != items.len() {
                return Err(BenchError::Input(format!("duplicate {what} in [{}]", items.join(", "))));
            }
            Ok(())
        };
        check_unique("datasets", self.datasets.iter().map(|d| d.name().to_owned()).collect())?;
        check_unique("placements", self.placements.iter().map(|p| p.to_string()).collect())?;
        check_unique("classifiers", self.classifiers.iter().map(|c| c.to_string()).collect())?;
        check_unique("seeds", self.seeds.iter().map(|s| s.to_string()).collect())?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BenchError::Input(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.owners == 0 {
            return Err(BenchError::Input("owners must be at least 1".into()));
        }
        self.noise.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
