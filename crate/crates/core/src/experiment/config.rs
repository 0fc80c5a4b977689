//! Experiment configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! seed = 7
//! horizon = 600
//! replications = 20
//! discount = 0.9
//!
//! [scenario]
//! kind = "generated"
//! count = 20
//! size_range = [1.0, 100.0]
//!
//! [[scenario.blocks]]
//! length = 600
//! popularity_range = [0.0, 0.5]
//! store_mean = 2.0
//! fetch_mean = 44.0
//!
//! [capacity]
//! hard_fraction = 0.4
//!
//! [[policy]]
//! kind = "mq_learning"
//! stepsize = 0.3
//! exploration = { kind = "constant", epsilon = 0.01 }
//!
//! [[policy]]
//! kind = "myopic"
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{build_catalog, two_point_model, CatalogFile, PriceModel, Scenario};
use crate::error::Error;
use crate::pricing::{CapacityConfig, DualTiming, ProjectionKey, StorageDual};
use crate::rng::{purpose, stream};
use crate::sim::PolicySpec;

/// A validation failure anchored to a key and, when it can be found, a line.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), line: None, message: message.into() }
    }

    fn at(path: impl Into<String>, err: Error) -> Self {
        Self::new(path, err.to_string())
    }

    /// Fills in the line of the last path segment if `text` contains it.
    fn locate(mut self, text: &str) -> Self {
        if self.line.is_some() {
            return self;
        }
        let key = self
            .path
            .rsplit('.')
            .next()
            .unwrap_or("")
            .split('[')
            .next()
            .unwrap_or("");
        if key.is_empty() {
            return self;
        }
        self.line = text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        self.line = self.line.map(|i| i + 1);
        self
    }
}

/// Price distribution of a file: a mean with the default two-point spread,
/// or an explicit `[[value, probability], ...]` support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriceSpec {
    Mean(f64),
    Support(Vec<(f64, f64)>),
}

impl PriceSpec {
    fn build(&self, relative_spread: f64) -> crate::Result<PriceModel> {
        match self {
            PriceSpec::Mean(m) => two_point_model(*m, relative_spread * m),
            PriceSpec::Support(s) => PriceModel::new(s.clone()),
        }
    }
}

fn default_size() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    crate::env::DEFAULT_RELATIVE_SPREAD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    #[serde(default = "default_size")]
    pub size: f64,
    pub popularity: f64,
    pub store_prices: PriceSpec,
    pub fetch_prices: PriceSpec,
}

/// One stationary block of a generated catalog. Price means are per unit
/// of file size; popularities are drawn uniformly from `popularity_range`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    #[serde(default)]
    pub length: Option<usize>,
    pub popularity_range: (f64, f64),
    pub store_mean: f64,
    pub fetch_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Explicit stationary files.
    Files { files: Vec<FileSpec> },
    /// Random sizes, per-block random popularities, size-proportional prices.
    Generated {
        count: usize,
        size_range: (f64, f64),
        #[serde(default = "default_spread")]
        relative_spread: f64,
        blocks: Vec<BlockSpec>,
    },
}

impl ScenarioSpec {
    pub fn build(&self, seed: u64) -> crate::Result<Scenario> {
        match self {
            ScenarioSpec::Files { files } => {
                let files = files
                    .iter()
                    .enumerate()
                    .map(|(id, f)| {
                        CatalogFile::new(
                            id,
                            f.size,
                            f.popularity,
                            f.store_prices.build(default_spread())?,
                            f.fetch_prices.build(default_spread())?,
                        )
                    })
                    .collect::<crate::Result<Vec<_>>>()?;
                Scenario::stationary(files)
            }
            ScenarioSpec::Generated { count, size_range, relative_spread, blocks } => {
                let catalog = build_catalog(*count, *size_range, seed)?;
                let resolved = blocks
                    .iter()
                    .enumerate()
                    .map(|(b, spec)| block_files(&catalog, spec, *relative_spread, seed, b as u64))
                    .collect::<crate::Result<Vec<_>>>()?;
                match (blocks.as_slice(), resolved.as_slice()) {
                    ([only], [files]) if only.length.is_none() => Scenario::stationary(files.clone()),
                    _ => {
                        let mut schedule = Vec::with_capacity(blocks.len());
                        for (i, (spec, files)) in blocks.iter().zip(resolved).enumerate() {
                            let length = spec.length.ok_or_else(|| {
                                Error::Scenario(format!("block {i} needs a length"))
                            })?;
                            schedule.push((length, files));
                        }
                        Scenario::from_blocks(schedule)
                    }
                }
            }
        }
    }
}

fn block_files(
    catalog: &[CatalogFile],
    spec: &BlockSpec,
    relative_spread: f64,
    seed: u64,
    block: u64,
) -> crate::Result<Vec<CatalogFile>> {
    let (lo, hi) = spec.popularity_range;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Scenario(format!("popularity range [{lo}, {hi}] is invalid")));
    }
    let mut rng = stream(seed, &[purpose::POPULARITY, block]);
    catalog
        .iter()
        .map(|f| {
            let u: f64 = rng.random();
            let p = lo + (hi - lo) * u;
            let store = spec.store_mean * f.size;
            let fetch = spec.fetch_mean * f.size;
            CatalogFile::new(
                f.id,
                f.size,
                p,
                two_point_model(store, relative_spread * store)?,
                two_point_model(fetch, relative_spread * fetch)?,
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StorageSpec {
    #[default]
    None,
    /// Give either an absolute `soft_capacity` or a `soft_fraction` of the
    /// aggregate catalog size; with neither, the hard capacity is used.
    LongTerm {
        #[serde(default)]
        soft_capacity: Option<f64>,
        #[serde(default)]
        soft_fraction: Option<f64>,
    },
    Stability,
}

/// Capacity settings, possibly relative to the aggregate catalog size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    #[serde(default)]
    pub hard_capacity: Option<f64>,
    #[serde(default)]
    pub hard_fraction: Option<f64>,
    #[serde(default)]
    pub storage: StorageSpec,
    #[serde(default)]
    pub backhaul_budget: Option<f64>,
    #[serde(default)]
    pub dual_timing: DualTiming,
    #[serde(default)]
    pub projection_key: ProjectionKey,
}

impl CapacitySpec {
    pub fn resolve(&self, aggregate_size: f64) -> Result<CapacityConfig, ConfigError> {
        let hard = match (self.hard_capacity, self.hard_fraction) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "capacity",
                    "give hard_capacity or hard_fraction, not both",
                ))
            }
            (Some(m), None) => Some(m),
            (None, Some(f)) => Some(f * aggregate_size),
            (None, None) => None,
        };
        let storage = match self.storage {
            StorageSpec::None => StorageDual::None,
            StorageSpec::Stability => StorageDual::Stability,
            StorageSpec::LongTerm { soft_capacity, soft_fraction } => {
                let soft = match (soft_capacity, soft_fraction, hard) {
                    (Some(_), Some(_), _) => {
                        return Err(ConfigError::new(
                            "capacity.storage",
                            "give soft_capacity or soft_fraction, not both",
                        ))
                    }
                    (Some(m), None, _) => m,
                    (None, Some(f), _) => f * aggregate_size,
                    (None, None, Some(m)) => m,
                    (None, None, None) => {
                        return Err(ConfigError::new(
                            "capacity.storage",
                            "long_term storage needs a soft capacity",
                        ))
                    }
                };
                StorageDual::LongTerm { soft_capacity: soft }
            }
        };
        let cfg = CapacityConfig {
            hard_capacity: hard,
            storage,
            backhaul_budget: self.backhaul_budget,
            dual_timing: self.dual_timing,
            projection_key: self.projection_key,
        };
        cfg.validate().map_err(|e| ConfigError::at("capacity", e))?;
        Ok(cfg)
    }
}

fn default_seed() -> u64 {
    1
}

fn default_replications() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub discount: f64,
    #[serde(default)]
    pub output: Option<String>,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub capacity: CapacitySpec,
    pub policy: Vec<PolicySpec>,
}

impl ExperimentConfig {
    /// Range checks that the schema cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(ConfigError::new("discount", format!("discount out of (0,1): {}", self.discount)));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "horizon must be at least 1"));
        }
        if self.replications == 0 {
            return Err(ConfigError::new("replications", "replications must be at least 1"));
        }
        if self.policy.is_empty() {
            return Err(ConfigError::new("policy", "at least one policy is required"));
        }
        for (i, p) in self.policy.iter().enumerate() {
            p.validate().map_err(|e| ConfigError::at(format!("policy[{i}]"), e))?;
        }
        let scenario = self.scenario.build(self.seed).map_err(|e| ConfigError::at("scenario", e))?;
        scenario
            .check_horizon(self.horizon)
            .map_err(|e| ConfigError::at("horizon", e))?;
        let aggregate: f64 = scenario.sizes().iter().sum();
        self.capacity.resolve(aggregate)?;
        Ok(())
    }

    /// Canonical TOML rendering.
    pub fn to_canonical(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `path = raw` in `table`. Path segments are separated by dots and
/// numeric segments index arrays. Whether the key is allowed is left to
/// schema validation.
pub fn apply_override(table: &mut toml::Table, path: &str, raw: &str) -> Result<(), ConfigError> {
    let value = parse_value(raw.trim());
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::new(path, "malformed override key"));
    }
    let mut root = toml::Value::Table(std::mem::take(table));
    let result = assign(&mut root, &segments, value).map_err(|m| ConfigError::new(path, m));
    if let toml::Value::Table(t) = root {
        *table = t;
    }
    result
}

fn assign(root: &mut toml::Value, segments: &[&str], value: toml::Value) -> Result<(), &'static str> {
    let (last, parents) = segments.split_last().ok_or("empty key")?;
    let mut cursor = root;
    for seg in parents {
        cursor = step(cursor, seg).ok_or("no such key")?;
    }
    match cursor {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
            Ok(())
        }
        toml::Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| "expected an array index")?;
            *a.get_mut(i).ok_or("index out of range")? = value;
            Ok(())
        }
        _ => Err("parent is not a table"),
    }
}

fn step<'a>(v: &'a mut toml::Value, seg: &str) -> Option<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => t.get_mut(seg),
        toml::Value::Array(a) => seg.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
        _ => None,
    }
}

/// Parses configuration text, applies `key=value` overrides and checks
/// every field.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| syntax_error(text, &e))?;
    for (k, v) in overrides {
        apply_override(&mut table, k, v)?;
    }
    let config: ExperimentConfig = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| syntax_error(text, &e))?
    } else {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::new("", e.message().to_string()).locate(text))?
    };
    config.validate().map_err(|e| e.locate(text))?;
    Ok(config)
}

/// Reads and validates a configuration file.
pub fn validate_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &[])
}

fn syntax_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError { path: String::new(), line, message: e.message().trim().to_string() }
}
