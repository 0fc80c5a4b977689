//! Slot-synchronous simulation of a catalog under a policy.
//!
//! Every file owns two random streams per replication: one for the
//! environment (requests and prices) and one for exploration. Different
//! policies run with the same seed therefore face identical request and
//! price sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{sample_slot, Scenario};
use crate::error::{check_range, Error, Result};
use crate::learning::{
    q_learning_step, stochastic_value_step, Bootstrap, ExplorationSchedule, NextSlot, QEstimate,
    ValueEstimate,
};
use crate::model::{
    bellman_decide, instantaneous_cost, is_feasible, ActionPair, MarginalFutureCost, PriceSample,
    SlotState, ValueTable,
};
use crate::planning::{finite_horizon_marginal_cost, value_iteration, FileModel, DEFAULT_TOLERANCE};
use crate::pricing::{
    mq_learning_step, project_c4, projection_key, Candidate, CapacityConfig, DualState, FileSlot,
    ProjectionKey,
};
use crate::rng::{purpose, stream, SimRng};

/// Which decision rule drives the cache.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Value-iteration policy of the block-true statistics.
    OptimalStationary,
    /// Bellman rule with the `h`-step marginal future cost.
    FiniteHorizon { horizon: usize },
    Myopic,
    StochasticValue { stepsize: f64 },
    QLearning {
        stepsize: f64,
        #[serde(default)]
        exploration: ExplorationSchedule,
        #[serde(default)]
        bootstrap: Bootstrap,
    },
    MqLearning {
        stepsize: f64,
        #[serde(default)]
        exploration: ExplorationSchedule,
        #[serde(default)]
        bootstrap: Bootstrap,
        /// Multiplier stepsize ζ; defaults to `1e-3 / (mean size · F)`.
        #[serde(default)]
        dual_stepsize: Option<f64>,
    },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::OptimalStationary => "optimal_stationary",
            PolicySpec::FiniteHorizon { .. } => "finite_horizon",
            PolicySpec::Myopic => "myopic",
            PolicySpec::StochasticValue { .. } => "stochastic_value",
            PolicySpec::QLearning { .. } => "q_learning",
            PolicySpec::MqLearning { .. } => "mq_learning",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let beta = |b: f64| check_range("stepsize", b, "(0,1)", b > 0.0 && b < 1.0);
        match *self {
            PolicySpec::OptimalStationary | PolicySpec::Myopic | PolicySpec::FiniteHorizon { .. } => {
                Ok(())
            }
            PolicySpec::StochasticValue { stepsize } => beta(stepsize),
            PolicySpec::QLearning { stepsize, exploration, .. } => {
                beta(stepsize)?;
                exploration.validate()
            }
            PolicySpec::MqLearning { stepsize, exploration, dual_stepsize, .. } => {
                beta(stepsize)?;
                exploration.validate()?;
                if let Some(z) = dual_stepsize {
                    check_range("dual_stepsize", z, "(0,inf)", z > 0.0)?;
                }
                Ok(())
            }
        }
    }

    fn is_online(&self) -> bool {
        matches!(
            self,
            PolicySpec::StochasticValue { .. } | PolicySpec::QLearning { .. } | PolicySpec::MqLearning { .. }
        )
    }
}

/// Settings shared by every policy of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub discount: f64,
    pub capacity: CapacityConfig,
}

impl SimConfig {
    pub fn new(discount: f64) -> Result<Self> {
        let cfg = Self { discount, capacity: CapacityConfig::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_capacity(mut self, capacity: CapacityConfig) -> Result<Self> {
        self.capacity = capacity;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("discount", self.discount, "(0,1)", self.discount > 0.0 && self.discount < 1.0)?;
        self.capacity.validate()
    }
}

/// `w = r(1 − s)`, `a = 1` iff `λ > ρ` and the file is at hand.
pub fn myopic_policy(state: SlotState, prices: PriceSample) -> ActionPair {
    let fetch = state.request && !state.cached;
    let cache = prices.fetch > prices.store && (fetch || state.cached);
    ActionPair::new(fetch, cache)
}

/// Everything observed and decided in one slot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: usize,
    pub states: Vec<SlotState>,
    pub actions: Vec<ActionPair>,
    pub prices: Vec<PriceSample>,
    pub costs: Vec<f64>,
    pub cost: f64,
    pub mu_hat: f64,
    pub nu_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub sizes: Vec<f64>,
    pub slots: Vec<SlotRecord>,
}

impl TrajectoryRecord {
    pub fn costs(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.cost).collect()
    }

    /// Total cached size per slot.
    pub fn cached_volume(&self) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| crate::pricing::cached_volume(&s.actions, &self.sizes))
            .collect()
    }

    /// Checks feasibility of every action and `s_{t+1} = a_t`.
    pub fn check_invariants(&self) -> Result<()> {
        for (k, slot) in self.slots.iter().enumerate() {
            for (f, (&s, &a)) in slot.states.iter().zip(&slot.actions).enumerate() {
                if !is_feasible(s, a) {
                    return Err(Error::Policy(format!("slot {} file {f}: {a} infeasible in {s}", slot.t)));
                }
                if let Some(next) = self.slots.get(k + 1) {
                    if next.states[f].cached != a.cache {
                        return Err(Error::Policy(format!(
                            "slot {} file {f}: cache bit does not follow the action",
                            slot.t
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `Σ_t γ^t c_t`.
pub fn discounted_cost(record: &TrajectoryRecord, discount: f64) -> f64 {
    discounted_sum(record.slots.iter().map(|s| s.cost), discount)
}

pub fn discounted_sum<I: IntoIterator<Item = f64>>(costs: I, discount: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for c in costs {
        total += weight * c;
        weight *= discount;
    }
    total
}

/// Fraction of file-slots with `a = 1`, optionally restricted to one state.
/// `None` when no file-slot matches.
pub fn caching_ratio(record: &TrajectoryRecord, state_filter: Option<SlotState>) -> Option<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for slot in &record.slots {
        for (s, a) in slot.states.iter().zip(&slot.actions) {
            if state_filter.is_none_or(|f| f == *s) {
                total += 1;
                hits += a.cache as usize;
            }
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

/// A policy with its per-scenario precomputation done.
#[derive(Clone, Debug)]
pub struct PreparedPolicy {
    spec: PolicySpec,
    config: SimConfig,
    /// Per block, per file, the value table used by planner rules.
    values: Vec<Vec<ValueTable>>,
    /// Per block, per file, the marginal future cost used by planner rules.
    margins: Vec<Vec<f64>>,
    sizes: Vec<f64>,
}

impl PreparedPolicy {
    pub fn new(scenario: &Scenario, spec: PolicySpec, config: SimConfig) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        let cap = &config.capacity;
        match spec {
            PolicySpec::MqLearning { .. } => {}
            _ if cap.has_duals() => {
                return Err(Error::Policy(format!(
                    "{} does not price capacity; use mq_learning",
                    spec.name()
                )))
            }
            _ if spec.is_online() && cap.hard_capacity.is_some() => {
                return Err(Error::Policy(format!(
                    "{} cannot enforce a hard capacity; use mq_learning",
                    spec.name()
                )))
            }
            _ => {}
        }
        let mut values = Vec::new();
        let mut margins = Vec::new();
        for block in scenario.blocks() {
            let mut v = Vec::with_capacity(block.files.len());
            let mut m = Vec::with_capacity(block.files.len());
            for file in &block.files {
                let model = FileModel::from_file(file, config.discount)?;
                match spec {
                    PolicySpec::OptimalStationary => {
                        let table = value_iteration(&model, DEFAULT_TOLERANCE);
                        m.push(table.marginal_cost(config.discount).value());
                        v.push(table);
                    }
                    PolicySpec::FiniteHorizon { horizon } => {
                        m.push(finite_horizon_marginal_cost(&model, horizon).value());
                        v.push(ValueTable::default());
                    }
                    _ => {}
                }
            }
            values.push(v);
            margins.push(m);
        }
        Ok(Self { spec, config, values, margins, sizes: scenario.sizes() })
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    /// Marginal future cost of file `f` in block `b` for planner rules.
    pub fn margin(&self, block: usize, f: usize) -> Option<f64> {
        self.margins.get(block).and_then(|m| m.get(f)).copied()
    }

    pub fn values(&self, block: usize, f: usize) -> Option<ValueTable> {
        self.values.get(block).and_then(|v| v.get(f)).copied()
    }
}

/// Per-replication state of an online learner.
enum Learner {
    None,
    Values(Vec<ValueEstimate>),
    Tables { tables: Vec<QEstimate>, duals: DualState, exploration: ExplorationSchedule },
}

struct Streams {
    env: Vec<SimRng>,
    explore: Vec<SimRng>,
}

impl Streams {
    fn new(seed: u64, replication: u64, files: usize) -> Self {
        let make = |p| (0..files as u64).map(|f| stream(seed, &[replication, p, f])).collect();
        Self { env: make(purpose::ENVIRONMENT), explore: make(purpose::EXPLORATION) }
    }
}

fn draw(scenario: &Scenario, t: usize, env: &mut [SimRng]) -> Vec<(bool, PriceSample)> {
    scenario.files_at(t).iter().zip(env.iter_mut()).map(|(f, rng)| sample_slot(f, rng)).collect()
}

/// Planner-style proposal and projection key of one file.
fn planner_choice(
    kind: ProjectionKey,
    state: SlotState,
    prices: PriceSample,
    margin: f64,
) -> (ActionPair, f64) {
    let action = bellman_decide(state, prices, MarginalFutureCost(margin));
    // Score relative to γV̄₀: caching saves the margin.
    let score = |a: ActionPair| instantaneous_cost(a, prices) - if a.cache { margin } else { 0.0 };
    (action, projection_key(kind, state, score))
}

fn simulate<F: FnMut(SlotRecord)>(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    horizon: usize,
    seed: u64,
    replication: u64,
    mut sink: F,
) -> Result<Vec<QEstimate>> {
    scenario.check_horizon(horizon)?;
    let files = scenario.file_count();
    let sizes = &policy.sizes;
    let discount = policy.config.discount;
    let cap = policy.config.capacity;
    let mut streams = Streams::new(seed, replication, files);
    let mut learner = match policy.spec {
        PolicySpec::StochasticValue { stepsize } => {
            Learner::Values(vec![ValueEstimate::new(stepsize)?; files])
        }
        PolicySpec::QLearning { stepsize, exploration, bootstrap }
        | PolicySpec::MqLearning { stepsize, exploration, bootstrap, .. } => {
            let table = QEstimate::new(stepsize)?.with_bootstrap(bootstrap);
            let zeta = match policy.spec {
                PolicySpec::MqLearning { dual_stepsize: Some(z), .. } => z,
                _ => {
                    let mean = sizes.iter().sum::<f64>() / files as f64;
                    1e-3 / (mean * files as f64)
                }
            };
            Learner::Tables { tables: vec![table; files], duals: DualState::new(zeta)?, exploration }
        }
        _ => Learner::None,
    };

    let mut cached = vec![false; files];
    let mut obs = draw(scenario, 0, &mut streams.env);
    for t in 0..horizon {
        let next_obs = draw(scenario, t + 1, &mut streams.env);
        let block = scenario.block_index(t);
        let states: Vec<SlotState> =
            obs.iter().zip(&cached).map(|(&(r, _), &s)| SlotState::new(r, s)).collect();
        let prices: Vec<PriceSample> = obs.iter().map(|&(_, p)| p).collect();
        let next = |f: usize| NextSlot { request: next_obs[f].0, prices: next_obs[f].1 };
        let mut mu_hat = 0.0;
        let mut nu_hat = 0.0;

        let actions: Vec<ActionPair> = match (&policy.spec, &mut learner) {
            (PolicySpec::StochasticValue { .. }, Learner::Values(est)) => (0..files)
                .map(|f| stochastic_value_step(&mut est[f], states[f], prices[f], discount))
                .collect(),
            (PolicySpec::QLearning { .. }, Learner::Tables { tables, exploration, .. }) => {
                let eps = exploration.epsilon(t as u64 + 1);
                (0..files)
                    .map(|f| {
                        q_learning_step(
                            &mut tables[f],
                            states[f],
                            prices[f],
                            next(f),
                            discount,
                            eps,
                            &mut streams.explore[f],
                        )
                    })
                    .collect()
            }
            (PolicySpec::MqLearning { .. }, Learner::Tables { tables, duals, exploration }) => {
                let eps = exploration.epsilon(t as u64 + 1);
                let slots: Vec<FileSlot> = (0..files)
                    .map(|f| FileSlot { state: states[f], prices: prices[f], next: next(f), size: sizes[f] })
                    .collect();
                let out = mq_learning_step(tables, &slots, duals, &cap, discount, eps, &mut streams.explore);
                mu_hat = out.duals.mu_hat;
                nu_hat = out.duals.nu_hat;
                out.actions
            }
            _ => {
                let choices: Vec<(ActionPair, f64)> = (0..files)
                    .map(|f| match policy.spec {
                        PolicySpec::Myopic => {
                            // The myopic rule values a held copy at one fetch.
                            let key = planner_choice(cap.projection_key, states[f], prices[f], prices[f].fetch).1;
                            (myopic_policy(states[f], prices[f]), key)
                        }
                        _ => planner_choice(cap.projection_key, states[f], prices[f], policy.margins[block][f]),
                    })
                    .collect();
                match cap.hard_capacity {
                    Some(m) => {
                        let candidates: Vec<Candidate> = (0..files)
                            .map(|f| Candidate {
                                action: choices[f].0,
                                key: choices[f].1,
                                size: sizes[f],
                                state: states[f],
                            })
                            .collect();
                        project_c4(&candidates, m)
                    }
                    None => choices.into_iter().map(|c| c.0).collect(),
                }
            }
        };

        let costs: Vec<f64> =
            actions.iter().zip(&prices).map(|(&a, &p)| instantaneous_cost(a, p)).collect();
        let cost = costs.iter().sum();
        for (c, a) in cached.iter_mut().zip(&actions) {
            *c = a.cache;
        }
        sink(SlotRecord { t, states, actions, prices, costs, cost, mu_hat, nu_hat });
        obs = next_obs;
    }
    Ok(match learner {
        Learner::Tables { tables, .. } => tables,
        _ => Vec::new(),
    })
}

/// Simulates `horizon` slots of replication `replication` from an empty
/// cache.
pub fn run_trajectory(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<TrajectoryRecord> {
    Ok(run_learning(scenario, policy, horizon, seed, replication)?.0)
}

/// Like [`run_trajectory`], also returning the final Q-tables of a
/// Q-learning policy (empty for other policies).
pub fn run_learning(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<(TrajectoryRecord, Vec<QEstimate>)> {
    let mut slots = Vec::with_capacity(horizon);
    let tables = simulate(scenario, policy, horizon, seed, replication, |s| slots.push(s))?;
    Ok((TrajectoryRecord { sizes: policy.sizes.clone(), slots }, tables))
}

/// Runs a fixed per-file rule `(file, state, prices) → action` on the same
/// environment streams as [`run_trajectory`]. No capacity is enforced.
pub fn run_rule<F>(
    scenario: &Scenario,
    rule: F,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<TrajectoryRecord>
where
    F: Fn(usize, SlotState, PriceSample) -> ActionPair,
{
    scenario.check_horizon(horizon)?;
    let files = scenario.file_count();
    let mut streams = Streams::new(seed, replication, files);
    let mut cached = vec![false; files];
    let mut slots = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let obs = draw(scenario, t, &mut streams.env);
        let states: Vec<SlotState> =
            obs.iter().zip(&cached).map(|(&(r, _), &s)| SlotState::new(r, s)).collect();
        let prices: Vec<PriceSample> = obs.iter().map(|&(_, p)| p).collect();
        let actions: Vec<ActionPair> = (0..files).map(|f| rule(f, states[f], prices[f])).collect();
        if let Some((f, a)) = actions.iter().enumerate().find(|(f, a)| !is_feasible(states[*f], **a)) {
            return Err(Error::Policy(format!("rule chose infeasible {a} for file {f} in {}", states[f])));
        }
        let costs: Vec<f64> =
            actions.iter().zip(&prices).map(|(&a, &p)| instantaneous_cost(a, p)).collect();
        let cost = costs.iter().sum();
        for (c, a) in cached.iter_mut().zip(&actions) {
            *c = a.cache;
        }
        slots.push(SlotRecord { t, states, actions, prices, costs, cost, mu_hat: 0.0, nu_hat: 0.0 });
    }
    Ok(TrajectoryRecord { sizes: scenario.sizes(), slots })
}

/// Per-slot summaries of one replication, without per-file detail.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlotSummary {
    pub cost: Vec<f64>,
    pub cached_volume: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub nu_hat: Vec<f64>,
}

pub fn run_summary(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<SlotSummary> {
    let mut out = SlotSummary::default();
    simulate(scenario, policy, horizon, seed, replication, |s| {
        out.cost.push(s.cost);
        out.cached_volume.push(crate::pricing::cached_volume(&s.actions, &policy.sizes));
        out.mu_hat.push(s.mu_hat);
        out.nu_hat.push(s.nu_hat);
    })?;
    Ok(out)
}

/// Mean cost curve over `replications` independent runs, computed in
/// parallel and summed in replication order.
pub fn run_ensemble(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    replications: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(run_ensemble_summary(scenario, policy, replications, horizon, seed)?.cost)
}

/// Like [`run_ensemble`] but averaging every per-slot summary.
pub fn run_ensemble_summary(
    scenario: &Scenario,
    policy: &PreparedPolicy,
    replications: usize,
    horizon: usize,
    seed: u64,
) -> Result<SlotSummary> {
    if replications == 0 {
        return Err(Error::Scenario("at least one replication is required".into()));
    }
    let runs: Vec<SlotSummary> = (0..replications as u64)
        .into_par_iter()
        .map(|i| run_summary(scenario, policy, horizon, seed, i))
        .collect::<Result<_>>()?;
    let n = replications as f64;
    let mean = |pick: fn(&SlotSummary) -> &Vec<f64>| {
        let mut acc = vec![0.0; horizon];
        for r in &runs {
            for (a, x) in acc.iter_mut().zip(pick(r)) {
                *a += x;
            }
        }
        acc.iter().map(|a| a / n).collect()
    };
    Ok(SlotSummary {
        cost: mean(|s| &s.cost),
        cached_volume: mean(|s| &s.cached_volume),
        mu_hat: mean(|s| &s.mu_hat),
        nu_hat: mean(|s| &s.nu_hat),
    })
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CatalogFile, PriceModel};

    fn hand_scenario() -> Scenario {
        let file = CatalogFile::single(1.0, PriceModel::point(1.0).unwrap(), PriceModel::point(4.0).unwrap())
            .unwrap();
        Scenario::stationary(vec![file]).unwrap()
    }

    fn st(r: u8, s: u8) -> SlotState {
        SlotState::new(r == 1, s == 1)
    }

    #[test]
    fn myopic_examples() {
        assert_eq!(myopic_policy(st(1, 0), PriceSample::new(1.0, 5.0)), ActionPair::FETCH_AND_CACHE);
        assert_eq!(myopic_policy(st(0, 0), PriceSample::new(1.0, 5.0)), ActionPair::IDLE);
        assert_eq!(myopic_policy(st(0, 1), PriceSample::new(5.0, 1.0)), ActionPair::IDLE);
    }

    #[test]
    fn hand_case_discounted_cost() {
        let sc = hand_scenario();
        let cfg = SimConfig::new(0.5).unwrap();
        let pol = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, cfg).unwrap();
        let rec = run_trajectory(&sc, &pol, 60, 1, 0).unwrap();
        rec.check_invariants().unwrap();
        assert!((discounted_cost(&rec, 0.5) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn zero_popularity_costs_nothing() {
        let file = CatalogFile::single(0.0, PriceModel::uniform(&[1.0, 3.0]).unwrap(), PriceModel::point(4.0).unwrap())
            .unwrap();
        let sc = Scenario::stationary(vec![file]).unwrap();
        let cfg = SimConfig::new(0.9).unwrap();
        for spec in [PolicySpec::OptimalStationary, PolicySpec::Myopic] {
            let pol = PreparedPolicy::new(&sc, spec, cfg).unwrap();
            let rec = run_trajectory(&sc, &pol, 200, 5, 0).unwrap();
            assert!(rec.costs().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn ratios_and_sums() {
        let sc = hand_scenario();
        let cfg = SimConfig::new(0.5).unwrap();
        let pol = PreparedPolicy::new(&sc, PolicySpec::OptimalStationary, cfg).unwrap();
        let rec = run_trajectory(&sc, &pol, 20, 1, 0).unwrap();
        assert_eq!(caching_ratio(&rec, None), Some(1.0));
        assert_eq!(caching_ratio(&rec, Some(st(0, 0))), None);
        let consts = (0..10).map(|_| 2.0);
        let expect = 2.0 * (1.0 - 0.9f64.powi(10)) / 0.1;
        assert!((discounted_sum(consts, 0.9) - expect).abs() < 1e-12);
    }

    #[test]
    fn ensemble_of_one_matches_trajectory() {
        let file = CatalogFile::single(0.4, PriceModel::uniform(&[1.0, 3.0]).unwrap(), PriceModel::uniform(&[4.0, 8.0]).unwrap())
            .unwrap();
        let sc = Scenario::stationary(vec![file]).unwrap();
        let cfg = SimConfig::new(0.9).unwrap();
        let spec = PolicySpec::QLearning {
            stepsize: 0.1,
            exploration: ExplorationSchedule::Constant { epsilon: 0.05 },
            bootstrap: Bootstrap::Min,
        };
        let pol = PreparedPolicy::new(&sc, spec, cfg).unwrap();
        let rec = run_trajectory(&sc, &pol, 300, 9, 0).unwrap();
        rec.check_invariants().unwrap();
        assert_eq!(run_ensemble(&sc, &pol, 1, 300, 9).unwrap(), rec.costs());
        assert_eq!(run_trajectory(&sc, &pol, 300, 9, 0).unwrap(), rec);
    }

    #[test]
    fn online_policies_reject_capacity() {
        let sc = hand_scenario();
        let cap = CapacityConfig { hard_capacity: Some(1.0), ..Default::default() };
        let cfg = SimConfig::new(0.9).unwrap().with_capacity(cap).unwrap();
        let spec = PolicySpec::StochasticValue { stepsize: 0.1 };
        assert!(PreparedPolicy::new(&sc, spec, cfg).is_err());
        assert!(PreparedPolicy::new(&sc, PolicySpec::Myopic, cfg).is_ok());
    }
}
