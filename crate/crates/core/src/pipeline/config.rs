use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::econometrics::{ControlSelection, RegressionSpec};
use crate::error::{Error, Result};
use crate::ingest::parse_timezone;
use crate::novelty::NoveltyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_timezone")]
    pub timezone: String,
    #[serde(default = "default_inauguration")]
    pub inauguration_date: NaiveDate,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Seed for the shuffled-exposure placebo.
    #[serde(default)]
    pub seed: u64,
    pub inputs: Inputs,
    #[serde(default)]
    pub novelty: NoveltySection,
    #[serde(default)]
    pub exposures: Vec<ExposureConfig>,
    #[serde(default)]
    pub regression: RegressionSection,
    #[serde(default)]
    pub irf: IrfSection,
    #[serde(default)]
    pub falsification: FalsificationSection,
    /// Directory that relative paths resolve against; set by [`RunConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_timezone() -> String {
    "America/New_York".into()
}

fn default_inauguration() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 1, 20).unwrap()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub posts: PathBuf,
    pub embeddings: PathBuf,
    #[serde(default = "yes")]
    pub verify_corpus_hash: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoveltySection {
    #[serde(default = "NoveltyConfig::energy")]
    pub primary: NoveltyConfig,
    #[serde(default)]
    pub alternative: Option<NoveltyConfig>,
}

impl Default for NoveltySection {
    fn default() -> Self {
        Self {
            primary: NoveltyConfig::energy(),
            alternative: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureRole {
    Primary,
    Alternative,
    Placebo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExposureSource {
    /// Keyword hits per 1,000 words from a transcript file.
    TranscriptDensity { path: PathBuf },
    /// Raw keyword hit counts from a transcript file.
    TranscriptHits { path: PathBuf },
    /// A `date,value` file.
    External { path: PathBuf },
    /// Day-wise mean of other configured exposures' raw values.
    Mean { of: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureConfig {
    pub name: String,
    pub role: ExposureRole,
    #[serde(flatten)]
    pub source: ExposureSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSection {
    pub p: usize,
    pub q_grid: Vec<usize>,
    /// Lag order of the model used for leads, falsification and exposure tables.
    pub main_q: usize,
    pub leads: usize,
    pub hac_bandwidth: usize,
    pub include_trend: bool,
    pub controls: ControlSelection,
}

impl Default for RegressionSection {
    fn default() -> Self {
        Self {
            p: 7,
            q_grid: vec![1, 3, 7],
            main_q: 3,
            leads: 3,
            hac_bandwidth: 7,
            include_trend: false,
            controls: ControlSelection::All,
        }
    }
}

impl RegressionSection {
    pub fn spec(&self, q: usize, leads: usize) -> RegressionSpec {
        RegressionSpec {
            p: self.p,
            q,
            leads,
            hac_bandwidth: self.hac_bandwidth,
            controls: self.controls.clone(),
            include_trend: self.include_trend,
        }
    }

    /// The lag-order grid followed by the leads specification.
    pub fn spec_grid(&self) -> Vec<RegressionSpec> {
        let mut specs: Vec<_> = self.q_grid.iter().map(|&q| self.spec(q, 0)).collect();
        if self.leads > 0 {
            specs.push(self.spec(self.main_q, self.leads));
        }
        specs
    }

    pub fn main_spec(&self) -> RegressionSpec {
        self.spec(self.main_q, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfSection {
    pub min_horizon: i64,
    pub max_horizon: i64,
    pub windows: Vec<(i64, i64)>,
    pub pretrend_horizons: Vec<i64>,
}

impl Default for IrfSection {
    fn default() -> Self {
        Self {
            min_horizon: -5,
            max_horizon: 14,
            windows: vec![(-3, -1), (0, 1), (0, 3), (0, 7), (0, 14)],
            pretrend_horizons: vec![-5, -4, -3, -2, -1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalsificationSection {
    /// Adds a placebo row using the primary exposure shuffled across days.
    #[serde(default)]
    pub shuffle_placebo: bool,
}

/// Outcome of [`RunConfig::validate`]: hard problems abort, warnings don't.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    /// Reads a config file, applying `dotted.key=value` overrides first.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.base_dir = base;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn exposure(&self, name: &str) -> Result<&ExposureConfig> {
        self.exposures
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Config(format!("no exposure named {name:?}")))
    }

    pub fn primary_exposure(&self) -> Result<&ExposureConfig> {
        let mut primaries = self.exposures.iter().filter(|e| e.role == ExposureRole::Primary);
        match (primaries.next(), primaries.next()) {
            (Some(p), None) => Ok(p),
            (None, _) => Err(Error::Config("no primary exposure configured".into())),
            (Some(_), Some(_)) => Err(Error::Config("more than one primary exposure".into())),
        }
    }

    pub fn exposures_with_role(&self, role: ExposureRole) -> impl Iterator<Item = &ExposureConfig> {
        self.exposures.iter().filter(move |e| e.role == role)
    }

    /// Files an exposure reads, following `mean` references.
    pub fn exposure_files(&self, name: &str) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.collect_files(name, &mut out, &mut seen)?;
        Ok(out)
    }

    fn collect_files(&self, name: &str, out: &mut Vec<PathBuf>, seen: &mut HashSet<String>) -> Result<()> {
        if !seen.insert(name.to_string()) {
            return Err(Error::Config(format!("exposure {name:?} refers to itself")));
        }
        match &self.exposure(name)?.source {
            ExposureSource::TranscriptDensity { path }
            | ExposureSource::TranscriptHits { path }
            | ExposureSource::External { path } => out.push(self.resolve(path)),
            ExposureSource::Mean { of } => {
                for part in of {
                    self.collect_files(part, out, seen)?;
                }
            }
        }
        seen.remove(name);
        Ok(())
    }

    /// Checks everything the main analysis needs. Missing alternative or
    /// placebo files only produce warnings; those stages skip them.
    pub fn validate(&self) -> Result<ValidationReport> {
        parse_timezone(&self.timezone)?;
        self.novelty.primary.validate()?;
        if let Some(alt) = &self.novelty.alternative {
            alt.validate()?;
        }
        for (label, p) in [("posts", &self.inputs.posts), ("embeddings", &self.inputs.embeddings)] {
            let path = self.resolve(p);
            if !path.is_file() {
                return Err(Error::Config(format!("{label} file {} does not exist", path.display())));
            }
        }
        let mut names = HashSet::new();
        for e in &self.exposures {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate exposure name {:?}", e.name)));
            }
        }
        let primary = self.primary_exposure()?;
        for f in self.exposure_files(&primary.name)? {
            if !f.is_file() {
                return Err(Error::Config(format!(
                    "primary exposure file {} does not exist",
                    f.display()
                )));
            }
        }
        let mut warnings = Vec::new();
        for e in self.exposures.iter().filter(|e| e.role != ExposureRole::Primary) {
            for f in self.exposure_files(&e.name)? {
                if !f.is_file() {
                    warnings.push(format!("exposure {:?}: {} does not exist", e.name, f.display()));
                }
            }
        }
        let r = &self.regression;
        if r.q_grid.is_empty() {
            return Err(Error::Config("regression.q_grid is empty".into()));
        }
        if self.irf.min_horizon > self.irf.max_horizon {
            return Err(Error::Config("irf.min_horizon exceeds irf.max_horizon".into()));
        }
        if self.irf.windows.iter().any(|(a, b)| a > b) {
            return Err(Error::Config("irf window with start after end".into()));
        }
        if self.irf.pretrend_horizons.is_empty() || self.irf.pretrend_horizons.iter().any(|h| *h >= 0) {
            return Err(Error::Config("irf.pretrend_horizons must be negative".into()));
        }
        Ok(ValidationReport { warnings })
    }

    /// Config echo for provenance; the output directory is left out so that
    /// runs into different directories hash the same.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        v
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part:?} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Hex SHA-256 of every input file, keyed by role.
pub fn input_hashes(cfg: &RunConfig, exposure_names: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    out.insert("posts".into(), crate::ingest::corpus_hash(cfg.resolve(&cfg.inputs.posts))?);
    out.insert(
        "embeddings".into(),
        crate::ingest::corpus_hash(cfg.resolve(&cfg.inputs.embeddings))?,
    );
    for name in exposure_names {
        for (i, f) in cfg.exposure_files(name)?.iter().enumerate() {
            if f.is_file() {
                out.insert(format!("exposure:{name}:{i}"), crate::ingest::corpus_hash(f)?);
            }
        }
    }
    Ok(out)
}
