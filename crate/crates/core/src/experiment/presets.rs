//! Figure presets and config-file runs.
//!
//! Every preset has a parameter struct whose defaults are the desk-scale
//! experiment. Overrides are `key=value` pairs addressed at that struct.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{apply_override, ExperimentConfig};
use super::output::Table;
use super::{ConfigError, ExperimentError};
use crate::env::{two_point_model, CatalogFile, Scenario};
use crate::learning::{Bootstrap, ExplorationSchedule};
use crate::model::{bellman_decide, ActionPair, SlotState};
use crate::planning::{evaluate_policy, value_iteration, FileModel, DEFAULT_TOLERANCE};
use crate::pricing::{CapacityConfig, ProjectionKey, StorageDual};
use crate::sim::{
    discounted_cost, mean_and_stderr, myopic_policy, run_ensemble_summary, run_trajectory,
    PolicySpec, PreparedPolicy, SimConfig,
};

/// Result of one preset or config run.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetOutput {
    pub name: String,
    pub seed: u64,
    /// Effective parameters after overrides.
    pub parameters: toml::Table,
    pub tables: Vec<Table>,
}

const PRESETS: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

pub fn preset_names() -> &'static [&'static str] {
    &PRESETS
}

/// Runs a named preset with `key=value` overrides.
pub fn run_preset(name: &str, overrides: &[(String, String)]) -> Result<PresetOutput, ExperimentError> {
    match name {
        "fig2" => finish(name, overrides, fig2),
        "fig3" => finish(name, overrides, fig3),
        "fig4" => finish(name, overrides, fig4),
        "fig5" => finish(name, overrides, fig5),
        "fig6" => finish(name, overrides, fig6),
        "fig7" => finish(name, overrides, fig7),
        other => Err(ExperimentError::UnknownPreset(other.to_string())),
    }
}

trait Params: Serialize + DeserializeOwned + Default {
    fn seed(&self) -> u64;
    fn validate(&self) -> Result<(), ConfigError>;
}

fn finish<P: Params>(
    name: &str,
    overrides: &[(String, String)],
    run: fn(&P) -> Result<Vec<Table>, ExperimentError>,
) -> Result<PresetOutput, ExperimentError> {
    let mut table = toml::Table::try_from(P::default()).expect("preset parameters serialize");
    for (k, v) in overrides {
        apply_override(&mut table, k, v)?;
    }
    let params: P = toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| {
        ConfigError { path: name.to_string(), line: None, message: e.message().trim().to_string() }
    })?;
    params.validate()?;
    let tables = run(&params)?;
    Ok(PresetOutput { name: name.to_string(), seed: params.seed(), parameters: table, tables })
}

fn bad(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), line: None, message: message.into() }
}

fn check_discount(g: f64) -> Result<(), ConfigError> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(bad("discount", format!("discount out of (0,1): {g}")))
    }
}

fn check_unit(path: &str, xs: &[f64]) -> Result<(), ConfigError> {
    match xs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(bad(path, format!("{p} out of [0,1]"))),
        None => Ok(()),
    }
}

fn check_nonneg(path: &str, xs: &[f64]) -> Result<(), ConfigError> {
    match xs.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        Some(x) => Err(bad(path, format!("{x} must be a nonnegative number"))),
        None => Ok(()),
    }
}

fn check_spread(s: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(bad("relative_spread", format!("relative_spread out of [0,1]: {s}")))
    }
}

/// `0, step, 2·step, ..` up to `max`.
fn grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn check_grid(path: &str, max: f64, step: f64) -> Result<(), ConfigError> {
    if step > 0.0 && max >= 0.0 && max / step <= 1e6 {
        Ok(())
    } else {
        Err(bad(path, format!("grid up to {max} with step {step} is invalid")))
    }
}

/// Single-file model with two-point prices at ±`spread` around the means.
fn file_model(p: f64, rho_bar: f64, lambda_bar: f64, spread: f64, discount: f64) -> crate::Result<FileModel> {
    let file = single_file(p, rho_bar, lambda_bar, spread)?;
    FileModel::from_file(&file, discount)
}

fn single_file(p: f64, rho_bar: f64, lambda_bar: f64, spread: f64) -> crate::Result<CatalogFile> {
    CatalogFile::single(
        p,
        two_point_model(rho_bar, spread * rho_bar)?,
        two_point_model(lambda_bar, spread * lambda_bar)?,
    )
}

/// Stationary per-slot cost level `(1 − γ)·V̄₀` of the optimal policy.
fn optimal_level(model: &FileModel) -> f64 {
    (1.0 - model.discount()) * value_iteration(model, DEFAULT_TOLERANCE).v0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig2 {
    seed: u64,
    discount: f64,
    popularities: Vec<f64>,
    lambda_bars: Vec<f64>,
    rho_max: f64,
    rho_step: f64,
    relative_spread: f64,
}

impl Default for Fig2 {
    fn default() -> Self {
        Self {
            seed: 1,
            discount: 0.9,
            popularities: vec![0.3, 0.5],
            lambda_bars: vec![43.0, 45.0, 50.0, 58.0],
            rho_max: 100.0,
            rho_step: 2.0,
            relative_spread: 0.1,
        }
    }
}

impl Params for Fig2 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_discount(self.discount)?;
        check_unit("popularities", &self.popularities)?;
        check_nonneg("lambda_bars", &self.lambda_bars)?;
        check_grid("rho_step", self.rho_max, self.rho_step)?;
        check_spread(self.relative_spread)
    }
}

/// Optimal per-slot cost level against ρ̄.
fn fig2(p: &Fig2) -> Result<Vec<Table>, ExperimentError> {
    let mut t = Table::new("fig2", &["rho_bar", "lambda_bar", "p", "avg_cost"]);
    for &pop in &p.popularities {
        for &lam in &p.lambda_bars {
            for rho in grid(p.rho_max, p.rho_step) {
                let m = file_model(pop, rho, lam, p.relative_spread, p.discount)?;
                t.push(vec![rho, lam, pop, optimal_level(&m)]);
            }
        }
    }
    Ok(vec![t])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig3 {
    seed: u64,
    discount: f64,
    p_step: f64,
    lambda_bars: Vec<f64>,
    rho_bars: Vec<f64>,
    relative_spread: f64,
}

impl Default for Fig3 {
    fn default() -> Self {
        Self {
            seed: 1,
            discount: 0.9,
            p_step: 0.05,
            lambda_bars: vec![45.0, 58.0],
            rho_bars: vec![1.0, 5.0, 20.0, 60.0],
            relative_spread: 0.1,
        }
    }
}

impl Params for Fig3 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_discount(self.discount)?;
        check_grid("p_step", 1.0, self.p_step)?;
        check_nonneg("lambda_bars", &self.lambda_bars)?;
        check_nonneg("rho_bars", &self.rho_bars)?;
        check_spread(self.relative_spread)
    }
}

/// Optimal per-slot cost level against popularity.
fn fig3(p: &Fig3) -> Result<Vec<Table>, ExperimentError> {
    let mut t = Table::new("fig3", &["p", "lambda_bar", "rho_bar", "avg_cost"]);
    for &lam in &p.lambda_bars {
        for &rho in &p.rho_bars {
            for pop in grid(1.0, p.p_step) {
                let m = file_model(pop.min(1.0), rho, lam, p.relative_spread, p.discount)?;
                t.push(vec![pop, lam, rho, optimal_level(&m)]);
            }
        }
    }
    Ok(vec![t])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig4 {
    seed: u64,
    discount: f64,
    popularity: f64,
    rho_max: f64,
    rho_step: f64,
    lambda_bars: Vec<f64>,
    relative_spread: f64,
    /// Slots simulated per grid point for the empirical ratio; 0 skips it.
    sim_slots: usize,
}

impl Default for Fig4 {
    fn default() -> Self {
        Self {
            seed: 1,
            discount: 0.9,
            popularity: 0.5,
            rho_max: 60.0,
            rho_step: 2.0,
            lambda_bars: (1..=10).map(|i| 10.0 * i as f64).collect(),
            relative_spread: 0.1,
            sim_slots: 2000,
        }
    }
}

impl Params for Fig4 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_discount(self.discount)?;
        check_unit("popularity", &[self.popularity])?;
        check_grid("rho_step", self.rho_max, self.rho_step)?;
        check_nonneg("lambda_bars", &self.lambda_bars)?;
        check_spread(self.relative_spread)
    }
}

/// Probability that the optimal rule keeps a requested, cached file.
pub(crate) fn exact_caching_ratio(model: &FileModel) -> f64 {
    let dv = value_iteration(model, DEFAULT_TOLERANCE).marginal_cost(model.discount());
    let state = SlotState::new(true, true);
    crate::planning::action_probabilities(model, state, dv)[ActionPair::KEEP.index()]
}

/// Caching ratio at `r = s = 1` against ρ̄ and λ̄.
fn fig4(p: &Fig4) -> Result<Vec<Table>, ExperimentError> {
    let mut t = Table::new(
        "fig4",
        &["rho_bar", "lambda_bar", "p", "caching_ratio", "simulated_ratio"],
    );
    let cfg = SimConfig::new(p.discount)?;
    for &lam in &p.lambda_bars {
        for rho in grid(p.rho_max, p.rho_step) {
            let file = single_file(p.popularity, rho, lam, p.relative_spread)?;
            let model = FileModel::from_file(&file, p.discount)?;
            let simulated = if p.sim_slots > 0 {
                let sc = Scenario::stationary(vec![file])?;
                let pol = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, cfg)?;
                let rec = run_trajectory(&sc, &pol, p.sim_slots, p.seed, 0)?;
                crate::sim::caching_ratio(&rec, Some(SlotState::new(true, true))).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            t.push(vec![rho, lam, p.popularity, exact_caching_ratio(&model), simulated]);
        }
    }
    Ok(vec![t])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig5 {
    seed: u64,
    lambda_bar: f64,
    rho_bars: Vec<f64>,
    popularities: Vec<f64>,
    discounts: Vec<f64>,
    relative_spread: f64,
    /// Monte Carlo replications per grid point; 0 skips the simulation.
    replications: usize,
}

impl Default for Fig5 {
    fn default() -> Self {
        Self {
            seed: 1,
            lambda_bar: 53.0,
            rho_bars: grid(60.0, 5.0),
            popularities: vec![0.2, 0.5, 0.8],
            discounts: vec![0.5, 0.9],
            relative_spread: 0.1,
            replications: 200,
        }
    }
}

impl Params for Fig5 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for &g in &self.discounts {
            check_discount(g)?;
        }
        check_unit("popularities", &self.popularities)?;
        check_nonneg("rho_bars", &self.rho_bars)?;
        check_nonneg("lambda_bar", &[self.lambda_bar])?;
        check_spread(self.relative_spread)
    }
}

/// Slots after which `γ^T` drops below `1e-10`.
pub(crate) fn truncation_horizon(discount: f64) -> usize {
    ((1e-10f64).ln() / discount.ln()).ceil() as usize
}

/// Discounted cost of the optimal and myopic rules from an empty cache:
/// exact values and a common-random-number Monte Carlo estimate.
fn fig5(p: &Fig5) -> Result<Vec<Table>, ExperimentError> {
    let mut t = Table::new(
        "fig5",
        &[
            "rho_bar", "lambda_bar", "p", "gamma", "dp_cost", "myopic_cost", "mc_dp_cost",
            "mc_myopic_cost", "mc_gap", "mc_gap_stderr",
        ],
    );
    for &g in &p.discounts {
        for &pop in &p.popularities {
            for &rho in &p.rho_bars {
                let file = single_file(pop, rho, p.lambda_bar, p.relative_spread)?;
                let model = FileModel::from_file(&file, g)?;
                let dv = value_iteration(&model, DEFAULT_TOLERANCE).marginal_cost(g);
                let dp = evaluate_policy(&model, |s, pr| bellman_decide(s, pr, dv)).v0;
                let my = evaluate_policy(&model, myopic_policy).v0;
                let mc = if p.replications > 0 {
                    monte_carlo_gap(file, g, p.replications, p.seed)?
                } else {
                    [f64::NAN; 4]
                };
                t.push(vec![rho, p.lambda_bar, pop, g, dp, my, mc[0], mc[1], mc[2], mc[3]]);
            }
        }
    }
    Ok(vec![t])
}

/// `[dp mean, myopic mean, gap mean, gap stderr]` of discounted costs.
pub(crate) fn monte_carlo_gap(
    file: CatalogFile,
    discount: f64,
    replications: usize,
    seed: u64,
) -> crate::Result<[f64; 4]> {
    let sc = Scenario::stationary(vec![file])?;
    let cfg = SimConfig::new(discount)?;
    let dp = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, cfg)?;
    let my = PreparedPolicy::new(&sc, PolicySpec::Myopic, cfg)?;
    let horizon = truncation_horizon(discount);
    let mut dps = Vec::with_capacity(replications);
    let mut mys = Vec::with_capacity(replications);
    for i in 0..replications as u64 {
        dps.push(discounted_cost(&run_trajectory(&sc, &dp, horizon, seed, i)?, discount));
        mys.push(discounted_cost(&run_trajectory(&sc, &my, horizon, seed, i)?, discount));
    }
    let gaps: Vec<f64> = mys.iter().zip(&dps).map(|(m, d)| m - d).collect();
    let (gap, se) = mean_and_stderr(&gaps);
    Ok([mean_and_stderr(&dps).0, mean_and_stderr(&mys).0, gap, se])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fig6 {
    seed: u64,
    discount: f64,
    lambda_bars: Vec<f64>,
    popularities: Vec<f64>,
    rho_bars: Vec<f64>,
    relative_spread: f64,
    stepsize: f64,
    epsilon: f64,
    horizon: usize,
    /// Slots excluded from the reported average.
    warmup: usize,
    replications: usize,
}

impl Default for Fig6 {
    fn default() -> Self {
        Self {
            seed: 1,
            discount: 0.9,
            lambda_bars: vec![29.0, 36.0, 44.0],
            popularities: vec![0.3, 0.5],
            rho_bars: grid(40.0, 4.0),
            relative_spread: 0.1,
            stepsize: 0.1,
            epsilon: 0.05,
            horizon: 2000,
            warmup: 1000,
            replications: 20,
        }
    }
}

impl Params for Fig6 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_discount(self.discount)?;
        check_nonneg("lambda_bars", &self.lambda_bars)?;
        check_unit("popularities", &self.popularities)?;
        check_nonneg("rho_bars", &self.rho_bars)?;
        check_spread(self.relative_spread)?;
        if !(self.stepsize > 0.0 && self.stepsize < 1.0) {
            return Err(bad("stepsize", format!("stepsize out of (0,1): {}", self.stepsize)));
        }
        check_unit("epsilon", &[self.epsilon])?;
        if self.warmup >= self.horizon {
            return Err(bad("warmup", "warmup must be shorter than the horizon"));
        }
        if self.replications == 0 {
            return Err(bad("replications", "replications must be at least 1"));
        }
        Ok(())
    }
}

/// Average cost after warm-up of value iteration and of Q-learning.
fn fig6(p: &Fig6) -> Result<Vec<Table>, ExperimentError> {
    let mut t = Table::new("fig6", &["rho_bar", "lambda_bar", "p", "vi_cost", "q_cost"]);
    let cfg = SimConfig::new(p.discount)?;
    let q = PolicySpec::QLearning {
        stepsize: p.stepsize,
        exploration: ExplorationSchedule::Constant { epsilon: p.epsilon },
        bootstrap: Bootstrap::Min,
    };
    let tail = |curve: Vec<f64>| curve[p.warmup..].iter().sum::<f64>() / (p.horizon - p.warmup) as f64;
    for &lam in &p.lambda_bars {
        for &pop in &p.popularities {
            for &rho in &p.rho_bars {
                let sc = Scenario::stationary(vec![single_file(pop, rho, lam, p.relative_spread)?])?;
                let vi = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, cfg)?;
                let ql = PreparedPolicy::new(&sc, q, cfg)?;
                let vi_cost = tail(run_ensemble_summary(&sc, &vi, p.replications, p.horizon, p.seed)?.cost);
                let q_cost = tail(run_ensemble_summary(&sc, &ql, p.replications, p.horizon, p.seed)?.cost);
                t.push(vec![rho, lam, pop, vi_cost, q_cost]);
            }
        }
    }
    Ok(vec![t])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct Fig7Block {
    pub fetch_mean: f64,
    pub store_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct Fig7 {
    pub seed: u64,
    pub files: usize,
    pub replications: usize,
    pub horizon: usize,
    pub blocks: Vec<Fig7Block>,
    pub popularity_range: (f64, f64),
    pub size_range: (f64, f64),
    pub relative_spread: f64,
    pub capacity_fraction: f64,
    /// Long-run storage target as a fraction of the aggregate size;
    /// defaults to `capacity_fraction`.
    #[serde(default)]
    pub soft_fraction: Option<f64>,
    pub stepsize: f64,
    pub epsilon: f64,
    pub discount: f64,
    #[serde(default)]
    pub dual_stepsize: Option<f64>,
    pub projection_key: ProjectionKey,
}

impl Default for Fig7 {
    fn default() -> Self {
        Self {
            seed: 1,
            files: 50,
            replications: 100,
            horizon: 600,
            blocks: vec![
                Fig7Block { fetch_mean: 44.0, store_mean: 2.0 },
                Fig7Block { fetch_mean: 40.0, store_mean: 5.0 },
                Fig7Block { fetch_mean: 38.0, store_mean: 2.0 },
            ],
            popularity_range: (0.0, 0.5),
            size_range: (1.0, 100.0),
            relative_spread: 0.1,
            capacity_fraction: 0.4,
            soft_fraction: None,
            stepsize: 0.3,
            epsilon: 0.01,
            discount: 0.9,
            dual_stepsize: None,
            projection_key: ProjectionKey::Score,
        }
    }
}

impl Params for Fig7 {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_discount(self.discount)?;
        if self.files == 0 {
            return Err(bad("files", "at least one file is required"));
        }
        if self.replications == 0 {
            return Err(bad("replications", "replications must be at least 1"));
        }
        if self.blocks.is_empty() || self.horizon < self.blocks.len() {
            return Err(bad("horizon", "every block needs at least one slot"));
        }
        check_unit("capacity_fraction", &[self.capacity_fraction])?;
        if let Some(f) = self.soft_fraction {
            check_unit("soft_fraction", &[f])?;
            if f > self.capacity_fraction {
                return Err(bad("soft_fraction", "soft capacity exceeds hard capacity"));
            }
        }
        if !(self.stepsize > 0.0 && self.stepsize < 1.0) {
            return Err(bad("stepsize", format!("stepsize out of (0,1): {}", self.stepsize)));
        }
        check_unit("epsilon", &[self.epsilon])?;
        check_spread(self.relative_spread)
    }
}

impl Fig7 {
    /// Block lengths; the last block absorbs any remainder.
    pub fn block_lengths(&self) -> Vec<usize> {
        let n = self.blocks.len();
        let base = self.horizon / n;
        let mut lengths = vec![base; n];
        lengths[n - 1] += self.horizon - base * n;
        lengths
    }

    pub fn scenario_spec(&self) -> super::ScenarioSpec {
        super::ScenarioSpec::Generated {
            count: self.files,
            size_range: self.size_range,
            relative_spread: self.relative_spread,
            blocks: self
                .blocks
                .iter()
                .zip(self.block_lengths())
                .map(|(b, len)| super::BlockSpec {
                    length: Some(len),
                    popularity_range: self.popularity_range,
                    store_mean: b.store_mean,
                    fetch_mean: b.fetch_mean,
                })
                .collect(),
        }
    }

    /// `(mq config, baseline config)` for a catalog of `aggregate` size.
    pub fn capacities(&self, aggregate: f64) -> (CapacityConfig, CapacityConfig) {
        let hard = self.capacity_fraction * aggregate;
        let soft = self.soft_fraction.map_or(hard, |f| f * aggregate);
        let base = CapacityConfig {
            hard_capacity: Some(hard),
            projection_key: self.projection_key,
            ..Default::default()
        };
        let mq = CapacityConfig { storage: StorageDual::LongTerm { soft_capacity: soft }, ..base };
        (mq, base)
    }

    pub fn mq_spec(&self) -> PolicySpec {
        PolicySpec::MqLearning {
            stepsize: self.stepsize,
            exploration: ExplorationSchedule::Constant { epsilon: self.epsilon },
            bootstrap: Bootstrap::Min,
            dual_stepsize: self.dual_stepsize,
        }
    }
}

/// Ensemble cost curves of MQ-learning, the myopic rule and the per-block
/// optimal stationary policy on a non-stationary capacity-limited catalog.
fn fig7(p: &Fig7) -> Result<Vec<Table>, ExperimentError> {
    let sc = p.scenario_spec().build(p.seed)?;
    let aggregate: f64 = sc.sizes().iter().sum();
    let (mq_cap, base_cap) = p.capacities(aggregate);
    let mq_cfg = SimConfig::new(p.discount)?.with_capacity(mq_cap)?;
    let base_cfg = SimConfig::new(p.discount)?.with_capacity(base_cap)?;
    let mq = PreparedPolicy::new(&sc, p.mq_spec(), mq_cfg)?;
    let my = PreparedPolicy::new(&sc, PolicySpec::Myopic, base_cfg)?;
    let opt = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, base_cfg)?;
    let run = |pol: &PreparedPolicy| run_ensemble_summary(&sc, pol, p.replications, p.horizon, p.seed);
    let (mq_s, my_s, opt_s) = (run(&mq)?, run(&my)?, run(&opt)?);
    let mut t = Table::new(
        "fig7",
        &[
            "t", "block", "mq_learning", "myopic", "optimal_stationary", "mq_cached_volume",
            "capacity", "mu_hat", "sample_popularity",
        ],
    );
    let capacity = mq_cap.hard_capacity.unwrap_or(f64::NAN);
    for i in 0..p.horizon {
        let b = sc.block_index(i);
        t.push(vec![
            i as f64,
            b as f64,
            mq_s.cost[i],
            my_s.cost[i],
            opt_s.cost[i],
            mq_s.cached_volume[i],
            capacity,
            mq_s.mu_hat[i],
            sc.files_at(i)[0].popularity,
        ]);
    }
    Ok(vec![t])
}

/// Runs every policy of a configuration; one per-slot table per policy.
pub fn run_config(config: &ExperimentConfig) -> Result<PresetOutput, ExperimentError> {
    config.validate()?;
    let sc = config.scenario.build(config.seed)?;
    let aggregate: f64 = sc.sizes().iter().sum();
    let capacity = config.capacity.resolve(aggregate)?;
    let stem = config
        .output
        .as_deref()
        .and_then(|o| std::path::Path::new(o).file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let mut tables = Vec::new();
    for (i, spec) in config.policy.iter().enumerate() {
        // Only the multiplier-aware learner sees the long-run constraints.
        let cap = match spec {
            PolicySpec::MqLearning { .. } => capacity,
            _ if spec_is_online(spec) => CapacityConfig::default(),
            _ => CapacityConfig { storage: StorageDual::None, backhaul_budget: None, ..capacity },
        };
        let cfg = SimConfig::new(config.discount)?.with_capacity(cap)?;
        let pol = PreparedPolicy::new(&sc, *spec, cfg)?;
        let s = run_ensemble_summary(&sc, &pol, config.replications, config.horizon, config.seed)?;
        let name = if config.policy.iter().filter(|p| p.name() == spec.name()).count() > 1 {
            format!("{stem}_{}_{i}", spec.name())
        } else {
            format!("{stem}_{}", spec.name())
        };
        let mut t = Table::new(name, &["t", "cost", "cached_volume", "mu_hat", "nu_hat"]);
        for k in 0..config.horizon {
            t.push(vec![k as f64, s.cost[k], s.cached_volume[k], s.mu_hat[k], s.nu_hat[k]]);
        }
        tables.push(t);
    }
    let parameters = toml::Table::try_from(config).expect("configuration serializes");
    Ok(PresetOutput { name: stem, seed: config.seed, parameters, tables })
}

fn spec_is_online(spec: &PolicySpec) -> bool {
    matches!(spec, PolicySpec::StochasticValue { .. } | PolicySpec::QLearning { .. })
}
