//! Request and price processes, file catalogs and block schedules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::model::PriceSample;
use crate::rng::{self, purpose};

const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Finite-support price distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PriceModel {
    support: Vec<(f64, f64)>,
    mean: f64,
}

impl PriceModel {
    /// Builds a model from `(value, probability)` pairs.
    pub fn new(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::PriceModel("empty support".into()));
        }
        let mut total = 0.0;
        let mut mean = 0.0;
        for &(value, prob) in &support {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::PriceModel(format!("support value {value} is not a nonnegative number")));
            }
            if !(prob.is_finite() && prob >= 0.0) {
                return Err(Error::PriceModel(format!("probability {prob} is invalid")));
            }
            total += prob;
            mean += value * prob;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::PriceModel(format!("probabilities sum to {total}")));
        }
        Ok(Self { support, mean })
    }

    /// Degenerate distribution at `value`.
    pub fn point(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)])
    }

    /// Equally likely values.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let n = values.len() as f64;
        Self::new(values.iter().map(|&v| (v, 1.0 / n)).collect())
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn max_value(&self) -> f64 {
        self.support.iter().map(|&(v, _)| v).fold(0.0, f64::max)
    }

    /// Multiplies every support value by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        check_range("scale factor", factor, "[0, inf)", factor >= 0.0)?;
        Self::new(self.support.iter().map(|&(v, p)| (v * factor, p)).collect())
    }

    /// Same shape, rescaled so the mean equals `mean`. A zero-mean model
    /// becomes a point mass.
    pub fn with_mean(&self, mean: f64) -> Result<Self> {
        if self.mean == 0.0 {
            Self::point(mean)
        } else {
            self.scaled(mean / self.mean)
        }
    }

    /// Draws one value; consumes exactly one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(value, prob) in &self.support {
            acc += prob;
            if u < acc {
                return value;
            }
        }
        // u landed in the rounding gap above the final cumulative sum
        self.support.last().map(|&(v, _)| v).unwrap_or(0.0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for PriceModel {
    type Error = Error;

    fn try_from(support: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(support)
    }
}

impl From<PriceModel> for Vec<(f64, f64)> {
    fn from(model: PriceModel) -> Self {
        model.support
    }
}

/// Symmetric two-point model `{mean − spread, mean + spread}` with equal mass.
pub fn two_point_model(mean: f64, spread: f64) -> Result<PriceModel> {
    check_range("spread", spread, "[0, inf)", spread >= 0.0)?;
    if mean < spread {
        return Err(Error::NegativePrice(mean - spread));
    }
    if spread == 0.0 {
        PriceModel::point(mean)
    } else {
        PriceModel::new(vec![(mean - spread, 0.5), (mean + spread, 0.5)])
    }
}

/// Default model for a given mean: two points at ±10% of the mean.
pub fn default_price_model(mean: f64) -> Result<PriceModel> {
    two_point_model(mean, DEFAULT_RELATIVE_SPREAD * mean)
}

pub const DEFAULT_RELATIVE_SPREAD: f64 = 0.1;

/// Price split into size-proportional and constant parts, each with a
/// component shared by all files and a file-specific one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffinePriceDecomposition {
    pub shared_per_bit: f64,
    pub file_per_bit: f64,
    pub shared_const: f64,
    pub file_const: f64,
}

/// `σ·(shared_per_bit + file_per_bit) + shared_const + file_const`.
pub fn compose_affine_price(decomp: &AffinePriceDecomposition, size: f64) -> Result<f64> {
    let price = size * (decomp.shared_per_bit + decomp.file_per_bit)
        + decomp.shared_const
        + decomp.file_const;
    if price < 0.0 || !price.is_finite() {
        return Err(Error::NegativePrice(price));
    }
    Ok(price)
}

/// A file of the catalog with its request and price statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub id: usize,
    pub size: f64,
    pub popularity: f64,
    pub store_prices: PriceModel,
    pub fetch_prices: PriceModel,
}

impl CatalogFile {
    pub fn new(
        id: usize,
        size: f64,
        popularity: f64,
        store_prices: PriceModel,
        fetch_prices: PriceModel,
    ) -> Result<Self> {
        check_range("size", size, "(0, inf)", size > 0.0)?;
        check_range("popularity", popularity, "[0, 1]", (0.0..=1.0).contains(&popularity))?;
        Ok(Self { id, size, popularity, store_prices, fetch_prices })
    }

    /// Unit-size file, handy for single-file experiments.
    pub fn single(popularity: f64, store_prices: PriceModel, fetch_prices: PriceModel) -> Result<Self> {
        Self::new(0, 1.0, popularity, store_prices, fetch_prices)
    }

    /// Copy with new popularity and price means, keeping the price shapes.
    pub fn with_override(&self, o: &FileOverride) -> Result<Self> {
        Self::new(
            self.id,
            self.size,
            o.popularity,
            self.store_prices.with_mean(o.store_mean)?,
            self.fetch_prices.with_mean(o.fetch_mean)?,
        )
    }
}

/// Draws `(request, prices)` for one slot: request, then ρ, then λ.
pub fn sample_slot<R: Rng + ?Sized>(file: &CatalogFile, rng: &mut R) -> (bool, PriceSample) {
    let u: f64 = rng.random();
    let request = u < file.popularity;
    let store = file.store_prices.sample(rng);
    let fetch = file.fetch_prices.sample(rng);
    (request, PriceSample::new(store, fetch))
}

/// Files with i.i.d. uniform sizes on `[low, high]`, zero popularity and
/// zero prices. Callers fill in statistics afterwards.
pub fn build_catalog(count: usize, size_range: (f64, f64), seed: u64) -> Result<Vec<CatalogFile>> {
    let (low, high) = size_range;
    if count == 0 {
        return Err(Error::Scenario("catalog needs at least one file".into()));
    }
    if !(low > 0.0 && low <= high && high.is_finite()) {
        return Err(Error::Scenario(format!("size range [{low}, {high}] is invalid")));
    }
    let mut rng = rng::stream(seed, &[purpose::CATALOG]);
    let zero = PriceModel::point(0.0)?;
    (0..count)
        .map(|id| {
            let size = if low == high { low } else { rng.random_range(low..=high) };
            CatalogFile::new(id, size, 0.0, zero.clone(), zero.clone())
        })
        .collect()
}

/// Per-file statistics for one block of a non-stationary schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileOverride {
    pub popularity: f64,
    pub store_mean: f64,
    pub fetch_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBlock {
    pub length: usize,
    pub files: Vec<FileOverride>,
}

/// Ordered blocks, each stationary, each overriding every file's statistics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSchedule {
    pub blocks: Vec<ScheduleBlock>,
}

impl ScenarioSchedule {
    pub fn total_length(&self) -> usize {
        self.blocks.iter().map(|b| b.length).sum()
    }
}

/// One resolved stationary stretch of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub start: usize,
    /// `None` for the open-ended block of a stationary scenario.
    pub length: Option<usize>,
    pub files: Vec<CatalogFile>,
}

/// A catalog together with its (possibly piecewise) statistics over time.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    blocks: Vec<Block>,
}

impl Scenario {
    pub fn stationary(files: Vec<CatalogFile>) -> Result<Self> {
        if files.is_empty() {
            return Err(Error::Scenario("empty catalog".into()));
        }
        Ok(Self { blocks: vec![Block { start: 0, length: None, files }] })
    }

    pub fn scheduled(catalog: Vec<CatalogFile>, schedule: &ScenarioSchedule) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::Scenario("empty catalog".into()));
        }
        if schedule.blocks.is_empty() {
            return Err(Error::Scenario("schedule has no blocks".into()));
        }
        let mut resolved = Vec::with_capacity(schedule.blocks.len());
        for (i, b) in schedule.blocks.iter().enumerate() {
            if b.files.len() != catalog.len() {
                return Err(Error::Scenario(format!(
                    "block {i} overrides {} files, catalog has {}",
                    b.files.len(),
                    catalog.len()
                )));
            }
            let files = catalog
                .iter()
                .zip(&b.files)
                .map(|(f, o)| f.with_override(o))
                .collect::<Result<Vec<_>>>()?;
            resolved.push((b.length, files));
        }
        Self::from_blocks(resolved)
    }

    /// Consecutive blocks given as `(length, files)`. Every block must
    /// describe the same files with the same sizes.
    pub fn from_blocks(blocks: Vec<(usize, Vec<CatalogFile>)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Scenario("schedule has no blocks".into()));
        }
        let sizes: Vec<f64> = blocks[0].1.iter().map(|f| f.size).collect();
        if sizes.is_empty() {
            return Err(Error::Scenario("empty catalog".into()));
        }
        let mut start = 0;
        let mut out = Vec::with_capacity(blocks.len());
        for (i, (length, files)) in blocks.into_iter().enumerate() {
            if length == 0 {
                return Err(Error::Scenario(format!("block {i} has zero length")));
            }
            if files.len() != sizes.len() || files.iter().zip(&sizes).any(|(f, &s)| f.size != s) {
                return Err(Error::Scenario(format!("block {i} does not match the catalog")));
            }
            out.push(Block { start, length: Some(length), files });
            start += length;
        }
        Ok(Self { blocks: out })
    }

    pub fn file_count(&self) -> usize {
        self.blocks[0].files.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_stationary(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0].length.is_none()
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.blocks[0].files.iter().map(|f| f.size).collect()
    }

    /// Checks that a scheduled scenario covers exactly `horizon` slots.
    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::Scenario("horizon must be at least one slot".into()));
        }
        if self.is_stationary() {
            return Ok(());
        }
        let total: usize = self.blocks.iter().filter_map(|b| b.length).sum();
        if total != horizon {
            return Err(Error::Scenario(format!(
                "schedule covers {total} slots but horizon is {horizon}"
            )));
        }
        Ok(())
    }

    /// Index of the block active at slot `t`.
    pub fn block_index(&self, t: usize) -> usize {
        self.blocks
            .iter()
            .rposition(|b| b.start <= t)
            .unwrap_or(0)
    }

    pub fn files_at(&self, t: usize) -> &[CatalogFile] {
        &self.blocks[self.block_index(t)].files
    }
}
