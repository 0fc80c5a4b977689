//! Offline solvers for a single file with known request and price statistics.
//!
//! All expectations are exact sums over the joint support
//! `request × ρ-support × λ-support`; nothing here samples.

use crate::env::{CatalogFile, PriceModel};
use crate::error::{check_range, Result};
use crate::model::{
    bellman_decide, feasible_actions, instantaneous_cost, reduced_actions, ActionPair,
    MarginalFutureCost, PriceSample, SlotState, ValueTable,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const MAX_ITERATIONS: usize = 1_000_000;

/// Statistics of one file as seen by the offline solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct FileModel {
    popularity: f64,
    store_prices: PriceModel,
    fetch_prices: PriceModel,
    discount: f64,
}

/// One point of the joint support.
#[derive(Clone, Copy, Debug)]
struct Outcome {
    request: bool,
    prices: PriceSample,
    prob: f64,
}

impl FileModel {
    pub fn new(
        popularity: f64,
        store_prices: PriceModel,
        fetch_prices: PriceModel,
        discount: f64,
    ) -> Result<Self> {
        check_range("popularity", popularity, "[0, 1]", (0.0..=1.0).contains(&popularity))?;
        check_range("discount", discount, "(0, 1)", discount > 0.0 && discount < 1.0)?;
        Ok(Self { popularity, store_prices, fetch_prices, discount })
    }

    pub fn from_file(file: &CatalogFile, discount: f64) -> Result<Self> {
        Self::new(file.popularity, file.store_prices.clone(), file.fetch_prices.clone(), discount)
    }

    pub fn popularity(&self) -> f64 {
        self.popularity
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn store_prices(&self) -> &PriceModel {
        &self.store_prices
    }

    pub fn fetch_prices(&self) -> &PriceModel {
        &self.fetch_prices
    }

    /// Price pairs with their joint probabilities.
    fn price_outcomes(&self) -> impl Iterator<Item = (PriceSample, f64)> + '_ {
        self.store_prices.support().iter().flat_map(move |&(rho, pr)| {
            self.fetch_prices
                .support()
                .iter()
                .map(move |&(lam, pl)| (PriceSample::new(rho, lam), pr * pl))
        })
    }

    fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        [(false, 1.0 - self.popularity), (true, self.popularity)]
            .into_iter()
            .filter(|&(_, pr)| pr > 0.0)
            .flat_map(move |(request, pr)| {
                self.price_outcomes()
                    .filter(|&(_, pp)| pp > 0.0)
                    .map(move |(prices, pp)| Outcome { request, prices, prob: pr * pp })
            })
    }

    /// Expected cost of the never-cache policy from an empty cache.
    pub fn always_fetch_bound(&self) -> f64 {
        self.popularity * self.fetch_prices.mean() / (1.0 - self.discount)
    }
}

/// One application of the Bellman operator to both cache states.
pub fn backup(model: &FileModel, table: &ValueTable) -> ValueTable {
    let g = model.discount;
    let mut next = [0.0; 2];
    for (s, slot) in next.iter_mut().enumerate() {
        let cached = s == 1;
        *slot = model
            .outcomes()
            .map(|o| {
                let state = SlotState::new(o.request, cached);
                let best = feasible_actions(state)
                    .iter()
                    .map(|&a| instantaneous_cost(a, o.prices) + g * table.get(a.cache))
                    .fold(f64::INFINITY, f64::min);
                o.prob * best
            })
            .sum();
    }
    ValueTable::new(next[0], next[1])
}

/// Value iteration from `(0, 0)` until successive iterates differ by less
/// than `tolerance` in both entries.
pub fn value_iteration(model: &FileModel, tolerance: f64) -> ValueTable {
    *value_iteration_iterates(model, tolerance)
        .last()
        .expect("at least one iterate")
}

/// Every iterate of [`value_iteration`], starting with `(0, 0)`.
pub fn value_iteration_iterates(model: &FileModel, tolerance: f64) -> Vec<ValueTable> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let mut iterates = vec![ValueTable::default()];
    for _ in 0..MAX_ITERATIONS {
        let current = *iterates.last().unwrap();
        let next = backup(model, &current);
        iterates.push(next);
        if next.max_abs_diff(&current) < tolerance {
            break;
        }
    }
    iterates
}

/// `max_s |V̄_s − (T V̄)_s|`.
pub fn bellman_residual(model: &FileModel, table: &ValueTable) -> f64 {
    table.max_abs_diff(&backup(model, table))
}

/// Absolute residuals of the two closed-form fixed-point equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormResidual {
    pub v0: f64,
    pub v1: f64,
}

impl ClosedFormResidual {
    pub fn max(&self) -> f64 {
        self.v0.max(self.v1)
    }

    pub fn sum(&self) -> f64 {
        self.v0 + self.v1
    }
}

/// Right-hand sides of the closed-form equations for `(V̄₀, V̄₁)`.
///
/// `V̄₁ = γV̄₀·Pr(ρ > ΔV̄) + E[(ρ + γV̄₁)·1{ρ ≤ ΔV̄}]`
///
/// `V̄₀ = (1−p)·(γV̄₀·Pr(λ+ρ > ΔV̄) + E[(λ+ρ+γV̄₁)·1{λ+ρ ≤ ΔV̄}])
///      + p·(E[λ] + γV̄₀·Pr(ρ > ΔV̄) + E[(ρ+γV̄₁)·1{ρ ≤ ΔV̄}])`
///
/// Ties go to caching, matching [`bellman_decide`].
pub fn closed_form_rhs(model: &FileModel, table: &ValueTable) -> ValueTable {
    let g = model.discount;
    let p = model.popularity;
    let dv = table.marginal_cost(g).value();
    let keep_v0 = g * table.v0;
    let keep_v1 = g * table.v1;

    // s = 1, either request value
    let mut stay_branch = 0.0;
    for &(rho, pr) in model.store_prices.support() {
        stay_branch += pr * if rho <= dv { rho + keep_v1 } else { keep_v0 };
    }

    // s = 0, r = 0: prefetch only when both prices are covered
    let mut prefetch_branch = 0.0;
    for (prices, pp) in model.price_outcomes() {
        let both = prices.store + prices.fetch;
        prefetch_branch += pp * if both <= dv { both + keep_v1 } else { keep_v0 };
    }

    let v1 = stay_branch;
    let v0 = (1.0 - p) * prefetch_branch + p * (model.fetch_prices.mean() + stay_branch);
    ValueTable::new(v0, v1)
}

pub fn closed_form_residual(model: &FileModel, table: &ValueTable) -> ClosedFormResidual {
    let rhs = closed_form_rhs(model, table);
    ClosedFormResidual { v0: (table.v0 - rhs.v0).abs(), v1: (table.v1 - rhs.v1).abs() }
}

/// Exhaustive two-dimensional search for the table minimizing the summed
/// closed-form residual over the grid `bounds.0 + k·grid_step`.
pub fn grid_search_solve(model: &FileModel, grid_step: f64, bounds: (f64, f64)) -> ValueTable {
    assert!(grid_step > 0.0, "grid step must be positive");
    let (lo, hi) = bounds;
    assert!(lo <= hi, "empty search range");
    let points = ((hi - lo) / grid_step).floor() as usize + 1;
    let at = |k: usize| lo + k as f64 * grid_step;
    let mut best = (f64::INFINITY, ValueTable::new(lo, lo));
    for i in 0..points {
        for j in 0..points {
            let candidate = ValueTable::new(at(i), at(j));
            let score = closed_form_residual(model, &candidate).sum();
            if score < best.0 {
                best = (score, candidate);
            }
        }
    }
    best.1
}

/// Marginal future cost used by the horizon-`h` policy: zero for the
/// myopic `h = 0`, otherwise derived from the horizon-`(h−1)` values.
pub fn finite_horizon_marginal_cost(model: &FileModel, horizon: usize) -> MarginalFutureCost {
    if horizon == 0 {
        MarginalFutureCost::ZERO
    } else {
        finite_horizon_values(model, horizon - 1).marginal_cost(model.discount)
    }
}

/// Values of the truncated-horizon recursion.
///
/// `h = 0` gives `(p·E[λ], 0)`; each further step applies the decisions
/// induced by the previous marginal cost and adds the discounted previous
/// values.
pub fn finite_horizon_values(model: &FileModel, horizon: usize) -> ValueTable {
    let mut values = ValueTable::new(model.popularity * model.fetch_prices.mean(), 0.0);
    for _ in 0..horizon {
        let dv = values.marginal_cost(model.discount);
        values = policy_backup(model, &values, |state, prices| bellman_decide(state, prices, dv));
    }
    values
}

/// `E[c(π) + γ·V̄_a]` for a fixed decision rule `π`.
pub fn policy_backup<F>(model: &FileModel, table: &ValueTable, rule: F) -> ValueTable
where
    F: Fn(SlotState, PriceSample) -> ActionPair,
{
    let g = model.discount;
    let mut next = [0.0; 2];
    for (s, slot) in next.iter_mut().enumerate() {
        *slot = model
            .outcomes()
            .map(|o| {
                let a = rule(SlotState::new(o.request, s == 1), o.prices);
                o.prob * (instantaneous_cost(a, o.prices) + g * table.get(a.cache))
            })
            .sum();
    }
    ValueTable::new(next[0], next[1])
}

/// Exact discounted cost of a stationary decision rule, from either cache
/// state, obtained by solving the two-state linear system.
pub fn evaluate_policy<F>(model: &FileModel, rule: F) -> ValueTable
where
    F: Fn(SlotState, PriceSample) -> ActionPair,
{
    let g = model.discount;
    // cost[s] and probability of ending with a copy, per starting cache bit
    let mut cost = [0.0; 2];
    let mut keep = [0.0; 2];
    for s in 0..2 {
        for o in model.outcomes() {
            let a = rule(SlotState::new(o.request, s == 1), o.prices);
            cost[s] += o.prob * instantaneous_cost(a, o.prices);
            if a.cache {
                keep[s] += o.prob;
            }
        }
    }
    // (I − γP)V = c with P = [[1−k0, k0], [1−k1, k1]]
    let a11 = 1.0 - g * (1.0 - keep[0]);
    let a12 = -g * keep[0];
    let a21 = -g * (1.0 - keep[1]);
    let a22 = 1.0 - g * keep[1];
    let det = a11 * a22 - a12 * a21;
    ValueTable::new((cost[0] * a22 - a12 * cost[1]) / det, (a11 * cost[1] - a21 * cost[0]) / det)
}

/// Probability of each action at `state` under the threshold rule with
/// marginal cost `delta_v`, indexed by [`ActionPair::index`].
pub fn action_probabilities(
    model: &FileModel,
    state: SlotState,
    delta_v: MarginalFutureCost,
) -> [f64; 4] {
    let mut probs = [0.0; 4];
    for (prices, pp) in model.price_outcomes() {
        probs[bellman_decide(state, prices, delta_v).index()] += pp;
    }
    probs
}

/// Marginalized Q-factors, indexed by state then action.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    factors: [[f64; 4]; 4],
}

impl QTable {
    /// Factor for `(state, action)`, `None` when the action is infeasible.
    pub fn get(&self, state: SlotState, action: ActionPair) -> Option<f64> {
        let v = self.factors[state.index()][action.index()];
        (!v.is_nan()).then_some(v)
    }

    /// The eight non-dominated `(state, action)` pairs.
    pub fn active(&self) -> impl Iterator<Item = (SlotState, ActionPair, f64)> + '_ {
        SlotState::ALL.into_iter().flat_map(move |s| {
            reduced_actions(s)
                .iter()
                .map(move |&a| (s, a, self.factors[s.index()][a.index()]))
        })
    }

    /// Expected optimal cost-to-go for each cache bit implied by the factors.
    pub fn state_values(&self, model: &FileModel) -> ValueTable {
        ValueTable::new(continuation(self, model, false), continuation(self, model, true))
    }
}

/// `Σ_r P(r)·E_prices min_z [Q̄_{r,s}^z − E[z·price] + z·price]` over the
/// reduced actions `z` of state `(r, s)`.
fn continuation(q: &QTable, model: &FileModel, cached: bool) -> f64 {
    let mean = PriceSample::new(model.store_prices.mean(), model.fetch_prices.mean());
    model
        .outcomes()
        .map(|o| {
            let state = SlotState::new(o.request, cached);
            let best = reduced_actions(state)
                .iter()
                .map(|&z| {
                    q.factors[state.index()][z.index()] - instantaneous_cost(z, mean)
                        + instantaneous_cost(z, o.prices)
                })
                .fold(f64::INFINITY, f64::min);
            o.prob * best
        })
        .sum()
}

/// Fixed point of the Q-factor ensemble equation, solved by damped
/// iteration. `damping = 1` is plain fixed-point iteration.
///
/// Each factor is the expected price of its own action plus the discounted
/// next-slot cost, where the next action is the one that is optimal for the
/// realized next-slot prices. Factors are produced for every feasible pair.
pub fn q_factor_ensemble(model: &FileModel, tolerance: f64) -> QTable {
    q_factor_ensemble_damped(model, tolerance, 1.0)
}

pub fn q_factor_ensemble_damped(model: &FileModel, tolerance: f64, damping: f64) -> QTable {
    assert!(tolerance > 0.0, "tolerance must be positive");
    assert!(damping > 0.0 && damping <= 1.0, "damping must be in (0, 1]");
    let g = model.discount;
    let mean = PriceSample::new(model.store_prices.mean(), model.fetch_prices.mean());
    let mut q = QTable { factors: [[f64::NAN; 4]; 4] };
    for s in SlotState::ALL {
        for &a in feasible_actions(s) {
            q.factors[s.index()][a.index()] = 0.0;
        }
    }
    for _ in 0..MAX_ITERATIONS {
        let cont = [continuation(&q, model, false), continuation(&q, model, true)];
        let mut change: f64 = 0.0;
        let mut next = q.clone();
        for s in SlotState::ALL {
            for &a in feasible_actions(s) {
                let target = instantaneous_cost(a, mean) + g * cont[a.cache as usize];
                let old = q.factors[s.index()][a.index()];
                let new = (1.0 - damping) * old + damping * target;
                change = change.max((new - old).abs());
                next.factors[s.index()][a.index()] = new;
            }
        }
        q = next;
        if change < tolerance {
            break;
        }
    }
    q
}
