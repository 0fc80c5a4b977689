//! Online solvers for files whose request and price statistics are unknown.
//!
//! [`ValueEstimate`] tracks the reduced value function directly and acts
//! through [`bellman_decide`]. [`QEstimate`] learns the marginalized Q-factors
//! `Q̄_{r,s}^{w,a}` of every feasible state-action pair.
//!
//! The Q-learner scores an action by its factor plus the deviation of the
//! current prices from their running means,
//!
//! ```text
//! score(r, s, w, a) = Q̂_{r,s}^{w,a} + w·(λ_t − λ̄) + a·(ρ_t − ρ̄)
//! ```
//!
//! and trains each factor on the mean-price target
//! `ŵ·λ̄ + â·ρ̄ + γ·min_z score(r_{t+1}, â, z)`. Factors thus hold
//! price-averaged costs and the slot's own prices enter exactly once.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::model::{
    bellman_decide, feasible_actions, instantaneous_cost, ActionPair, PriceSample, SlotState,
    ValueTable,
};

/// Stochastic estimate of `(V̄₀, V̄₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub v0_hat: f64,
    pub v1_hat: f64,
    stepsize: f64,
}

impl ValueEstimate {
    pub fn new(stepsize: f64) -> Result<Self> {
        Self::with_values(ValueTable::default(), stepsize)
    }

    pub fn with_values(values: ValueTable, stepsize: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        Ok(Self { v0_hat: values.v0, v1_hat: values.v1, stepsize })
    }

    pub fn stepsize(&self) -> f64 {
        self.stepsize
    }

    pub fn values(&self) -> ValueTable {
        ValueTable::new(self.v0_hat, self.v1_hat)
    }
}

/// Acts greedily on the current estimate, then moves the entry of the
/// current cache bit towards `ŵλ + âρ + γ·V̂_â`.
pub fn stochastic_value_step(
    est: &mut ValueEstimate,
    state: SlotState,
    prices: PriceSample,
    discount: f64,
) -> ActionPair {
    let values = est.values();
    let action = bellman_decide(state, prices, values.marginal_cost(discount));
    let target = instantaneous_cost(action, prices) + discount * values.get(action.cache);
    let beta = est.stepsize;
    let entry = if state.cached { &mut est.v1_hat } else { &mut est.v0_hat };
    *entry = (1.0 - beta) * *entry + beta * target;
    action
}

/// How the next slot enters the Q-learning target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// Minimum over the next slot's feasible actions of the price-adjusted
    /// score, floored at zero since costs are nonnegative.
    #[default]
    Min,
    /// Factor of the next slot's greedy action, without its price deviation.
    Starred,
    /// Minimum over the next slot's feasible factors, ignoring prices.
    MinFactor,
}

/// Learning parameters shared by every file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub stepsize: f64,
    pub discount: f64,
    pub bootstrap: Bootstrap,
}

impl QLearningConfig {
    pub fn new(stepsize: f64, discount: f64) -> Result<Self> {
        let cfg = Self { stepsize, discount, bootstrap: Bootstrap::Min };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_stepsize(self.stepsize)?;
        check_range("discount", self.discount, "(0,1)", self.discount > 0.0 && self.discount < 1.0)
    }
}

/// What the learner sees of the next slot before updating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NextSlot {
    pub request: bool,
    pub prices: PriceSample,
}

/// Tabular Q-factors for one file, indexed by state and action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    factors: [[f64; 4]; 4],
    visits: [[u64; 4]; 4],
    stepsize: f64,
    bootstrap: Bootstrap,
    price_count: u64,
    store_mean: f64,
    fetch_mean: f64,
}

impl QEstimate {
    /// Zero-initialized table.
    pub fn new(stepsize: f64) -> Result<Self> {
        check_stepsize(stepsize)?;
        Ok(Self {
            factors: [[0.0; 4]; 4],
            visits: [[0; 4]; 4],
            stepsize,
            bootstrap: Bootstrap::Min,
            price_count: 0,
            store_mean: 0.0,
            fetch_mean: 0.0,
        })
    }

    pub fn from_config(cfg: &QLearningConfig) -> Result<Self> {
        Ok(Self::new(cfg.stepsize)?.with_bootstrap(cfg.bootstrap))
    }

    pub fn with_bootstrap(mut self, bootstrap: Bootstrap) -> Self {
        self.bootstrap = bootstrap;
        self
    }

    pub fn stepsize(&self) -> f64 {
        self.stepsize
    }

    pub fn bootstrap(&self) -> Bootstrap {
        self.bootstrap
    }

    pub fn factor(&self, state: SlotState, action: ActionPair) -> f64 {
        self.factors[state.index()][action.index()]
    }

    /// Overwrites one factor. Infeasible pairs are rejected.
    pub fn set_factor(&mut self, state: SlotState, action: ActionPair, value: f64) -> Result<()> {
        if !crate::model::is_feasible(state, action) {
            return Err(Error::Policy(format!("{action} is infeasible in {state}")));
        }
        self.factors[state.index()][action.index()] = value;
        Ok(())
    }

    pub fn visits(&self, state: SlotState, action: ActionPair) -> u64 {
        self.visits[state.index()][action.index()]
    }

    /// Running means `(ρ̄, λ̄)` of the prices observed so far.
    pub fn price_means(&self) -> PriceSample {
        PriceSample::new(self.store_mean, self.fetch_mean)
    }

    /// Folds the slot's prices into the running means.
    pub fn observe_prices(&mut self, prices: PriceSample) {
        self.price_count += 1;
        let n = self.price_count as f64;
        self.store_mean += (prices.store - self.store_mean) / n;
        self.fetch_mean += (prices.fetch - self.fetch_mean) / n;
    }

    /// Factor plus the deviation of `prices` from their running means.
    pub fn score(&self, state: SlotState, action: ActionPair, prices: PriceSample) -> f64 {
        let mut s = self.factor(state, action);
        if action.fetch {
            s += prices.fetch - self.fetch_mean;
        }
        if action.cache {
            s += prices.store - self.store_mean;
        }
        s
    }

    /// Lowest-score feasible action; ties go to the lexicographically
    /// smallest pair.
    pub fn greedy(&self, state: SlotState, prices: PriceSample) -> ActionPair {
        argmin(feasible_actions(state), |a| self.score(state, a, prices))
    }

    /// ε-greedy choice. Always consumes one uniform for the coin and, when
    /// exploring, one more for the action.
    pub fn select<R: Rng + ?Sized>(
        &self,
        state: SlotState,
        prices: PriceSample,
        epsilon: f64,
        rng: &mut R,
    ) -> ActionPair {
        let coin: f64 = rng.random();
        if coin < epsilon {
            let choices = feasible_actions(state);
            choices[rng.random_range(0..choices.len())]
        } else {
            self.greedy(state, prices)
        }
    }

    /// Moves the visited factor towards its one-step target.
    pub fn update(
        &mut self,
        state: SlotState,
        action: ActionPair,
        next: NextSlot,
        discount: f64,
    ) {
        let next_state = SlotState::new(next.request, action.cache);
        let continuation = match self.bootstrap {
            Bootstrap::Min => feasible_actions(next_state)
                .iter()
                .map(|&z| self.score(next_state, z, next.prices))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            Bootstrap::Starred => {
                self.factor(next_state, self.greedy(next_state, next.prices))
            }
            Bootstrap::MinFactor => feasible_actions(next_state)
                .iter()
                .map(|&z| self.factor(next_state, z))
                .fold(f64::INFINITY, f64::min),
        };
        let target = instantaneous_cost(action, self.price_means()) + discount * continuation;
        let beta = self.stepsize;
        let q = &mut self.factors[state.index()][action.index()];
        *q = (1.0 - beta) * *q + beta * target;
        self.visits[state.index()][action.index()] += 1;
    }

    /// Frozen greedy rule of the current table.
    pub fn greedy_policy(&self) -> GreedyPolicy {
        GreedyPolicy { table: self.clone() }
    }
}

/// One learning slot: observe prices, act ε-greedily, update the visited
/// factor using the next slot's request and prices.
#[allow(clippy::too_many_arguments)]
pub fn q_learning_step<R: Rng + ?Sized>(
    est: &mut QEstimate,
    state: SlotState,
    prices: PriceSample,
    next: NextSlot,
    discount: f64,
    epsilon: f64,
    rng: &mut R,
) -> ActionPair {
    est.observe_prices(prices);
    let action = est.select(state, prices, epsilon, rng);
    est.update(state, action, next, discount);
    action
}

/// Greedy rule `(state, prices) → action` read off a learned table.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyPolicy {
    table: QEstimate,
}

impl GreedyPolicy {
    pub fn decide(&self, state: SlotState, prices: PriceSample) -> ActionPair {
        self.table.greedy(state, prices)
    }
}

pub fn greedy_policy(est: &QEstimate) -> GreedyPolicy {
    est.greedy_policy()
}

/// Exploration rate as a function of the 1-based slot counter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplorationSchedule {
    Constant { epsilon: f64 },
    /// `max(1/t, floor)`; `floor = 0` gives the plain GLIE schedule.
    GlieInverseT {
        #[serde(default)]
        floor: f64,
    },
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        ExplorationSchedule::Constant { epsilon: 0.01 }
    }
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExplorationSchedule::Constant { epsilon } => {
                check_range("epsilon", epsilon, "[0,1]", (0.0..=1.0).contains(&epsilon))
            }
            ExplorationSchedule::GlieInverseT { floor } => {
                check_range("floor", floor, "[0,1]", (0.0..=1.0).contains(&floor))
            }
        }
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        match *self {
            ExplorationSchedule::Constant { epsilon } => epsilon,
            ExplorationSchedule::GlieInverseT { floor } => (1.0 / t.max(1) as f64).max(floor),
        }
    }
}

pub(crate) fn argmin<F: Fn(ActionPair) -> f64>(actions: &[ActionPair], score: F) -> ActionPair {
    let mut best = actions[0];
    let mut best_score = score(best);
    for &a in &actions[1..] {
        let s = score(a);
        if s < best_score {
            best = a;
            best_score = s;
        }
    }
    best
}

fn check_stepsize(beta: f64) -> Result<()> {
    check_range("stepsize", beta, "(0,1)", beta > 0.0 && beta < 1.0)
}
