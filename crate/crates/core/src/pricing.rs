//! Capacity constraints handled through dynamic prices.
//!
//! A storage multiplier `μ̂` and a back-haul multiplier `ν̂` act as per-unit
//! surcharges on the storage and fetch prices. They are learned by projected
//! stochastic subgradient steps on the slot's constraint violation. A hard
//! per-slot storage limit is enforced on top by [`project_c4`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::learning::{NextSlot, QEstimate};
use crate::model::{
    bellman_decide, instantaneous_cost, ActionPair, MarginalFutureCost, PriceSample, SlotState,
    ValueTable,
};

/// Stochastic multipliers for the storage and back-haul constraints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub mu_hat: f64,
    pub nu_hat: f64,
    stepsize: f64,
}

impl DualState {
    pub fn new(stepsize: f64) -> Result<Self> {
        Self::with_multipliers(0.0, 0.0, stepsize)
    }

    pub fn with_multipliers(mu_hat: f64, nu_hat: f64, stepsize: f64) -> Result<Self> {
        check_range("dual stepsize", stepsize, "(0,inf)", stepsize > 0.0)?;
        check_range("mu_hat", mu_hat, "[0,inf)", mu_hat >= 0.0)?;
        check_range("nu_hat", nu_hat, "[0,inf)", nu_hat >= 0.0)?;
        Ok(Self { mu_hat, nu_hat, stepsize })
    }

    pub fn stepsize(&self) -> f64 {
        self.stepsize
    }
}

/// Which long-run storage constraint drives `μ̂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StorageDual {
    #[default]
    None,
    /// Average stored volume at most `soft_capacity`.
    LongTerm { soft_capacity: f64 },
    /// Inflow into the cache no larger than outflow on average.
    Stability,
}

/// Whether the multipliers see the proposed or the projected actions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualTiming {
    #[default]
    Proposed,
    Executed,
}

/// Ordering used by [`project_c4`] among files that want to cache.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKey {
    /// Score of the file's best caching action.
    #[default]
    Score,
    /// Score of the best caching action minus that of the best non-caching
    /// action.
    Advantage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    /// Per-slot limit on the total size of cached files.
    #[serde(default)]
    pub hard_capacity: Option<f64>,
    #[serde(default)]
    pub storage: StorageDual,
    /// Per-slot back-haul budget `b`.
    #[serde(default)]
    pub backhaul_budget: Option<f64>,
    #[serde(default)]
    pub dual_timing: DualTiming,
    #[serde(default)]
    pub projection_key: ProjectionKey,
}

impl CapacityConfig {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.hard_capacity {
            check_range("hard_capacity", m, "(0,inf)", m > 0.0)?;
        }
        if let StorageDual::LongTerm { soft_capacity } = self.storage {
            check_range("soft_capacity", soft_capacity, "(0,inf)", soft_capacity > 0.0)?;
            if let Some(m) = self.hard_capacity {
                if soft_capacity > m {
                    return Err(Error::Capacity(format!(
                        "soft_capacity {soft_capacity} exceeds hard_capacity {m}"
                    )));
                }
            }
        }
        if let Some(b) = self.backhaul_budget {
            check_range("backhaul_budget", b, "[0,inf)", b >= 0.0)?;
        }
        Ok(())
    }

    /// Whether any multiplier can move away from zero.
    pub fn has_duals(&self) -> bool {
        self.storage != StorageDual::None || self.backhaul_budget.is_some()
    }
}

/// `ρ + μ̂σ`, `λ + ν̂σ`.
pub fn augment_prices(prices: PriceSample, size: f64, duals: &DualState) -> PriceSample {
    PriceSample::new(prices.store + duals.mu_hat * size, prices.fetch + duals.nu_hat * size)
}

/// `μ̂ ← [μ̂ + ζ(cached − M′)]⁺`.
pub fn dual_update_capacity(duals: &DualState, cached_bytes: f64, soft_capacity: f64) -> DualState {
    DualState {
        mu_hat: (duals.mu_hat + duals.stepsize * (cached_bytes - soft_capacity)).max(0.0),
        ..*duals
    }
}

/// `ν̂ ← [ν̂ + ζ(fetched − b)]⁺`.
pub fn dual_update_backhaul(duals: &DualState, fetched_bytes: f64, link_budget: f64) -> DualState {
    DualState {
        nu_hat: (duals.nu_hat + duals.stepsize * (fetched_bytes - link_budget)).max(0.0),
        ..*duals
    }
}

/// Net bytes entering the cache: insertions minus evictions.
pub fn net_inflow(actions: &[ActionPair], states: &[SlotState], sizes: &[f64]) -> f64 {
    actions
        .iter()
        .zip(states)
        .zip(sizes)
        .map(|((a, s), &size)| match (s.cached, a.cache) {
            (false, true) => size,
            (true, false) => -size,
            _ => 0.0,
        })
        .sum()
}

/// `μ̂ ← [μ̂ + ζ·Σ σ([â − s]⁺ − [s − â]⁺)]⁺`.
pub fn dual_update_stability(
    duals: &DualState,
    actions: &[ActionPair],
    states: &[SlotState],
    sizes: &[f64],
) -> DualState {
    let flow = net_inflow(actions, states, sizes);
    DualState { mu_hat: (duals.mu_hat + duals.stepsize * flow).max(0.0), ..*duals }
}

/// Bellman rule with eviction credited `μ̂σ`, i.e. `γV̄₀` replaced by
/// `γV̄₀ − μ̂σ` in every branch. For an uncached file this is the same as
/// raising ρ by `μ̂σ`.
pub fn stability_adjusted_decide(
    state: SlotState,
    prices: PriceSample,
    value: &ValueTable,
    duals: &DualState,
    size: f64,
    discount: f64,
) -> ActionPair {
    let dv = value.marginal_cost(discount).value() - duals.mu_hat * size;
    bellman_decide(state, prices, MarginalFutureCost(dv))
}

/// One file's entry for the hard-capacity projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub action: ActionPair,
    pub key: f64,
    pub size: f64,
    pub state: SlotState,
}

/// Cheapest feasible action that does not cache.
pub fn minimal_action(state: SlotState) -> ActionPair {
    ActionPair::new(state.request && !state.cached, false)
}

/// Admits caching files in ascending key order, skipping any that no longer
/// fit. Rejected files fall back to [`minimal_action`]. Output is aligned
/// with the input.
pub fn project_c4(candidates: &[Candidate], hard_capacity: f64) -> Vec<ActionPair> {
    let mut out: Vec<ActionPair> = candidates.iter().map(|c| c.action).collect();
    let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].action.cache).collect();
    order.sort_by(|&i, &j| candidates[i].key.total_cmp(&candidates[j].key).then(i.cmp(&j)));
    let mut used = 0.0;
    let mut admitted = Vec::with_capacity(order.len());
    for i in order {
        let c = &candidates[i];
        if used + c.size <= hard_capacity {
            used += c.size;
            admitted.push(i);
        } else {
            out[i] = minimal_action(c.state);
        }
    }
    // Summing in index order can round past the budget; drop the worst keys.
    let sizes: Vec<f64> = candidates.iter().map(|c| c.size).collect();
    while cached_volume(&out, &sizes) > hard_capacity {
        let i = admitted.pop().expect("an empty cache fits any budget");
        out[i] = minimal_action(candidates[i].state);
    }
    out
}

/// Total size of the files cached by `actions`.
pub fn cached_volume(actions: &[ActionPair], sizes: &[f64]) -> f64 {
    actions.iter().zip(sizes).filter(|(a, _)| a.cache).map(|(_, s)| s).sum()
}

/// Total size of the files fetched by `actions`.
pub fn fetched_volume(actions: &[ActionPair], sizes: &[f64]) -> f64 {
    actions.iter().zip(sizes).filter(|(a, _)| a.fetch).map(|(_, s)| s).sum()
}

/// Applies the multiplier updates enabled by `config` for one slot.
pub fn update_duals(
    duals: &DualState,
    config: &CapacityConfig,
    actions: &[ActionPair],
    states: &[SlotState],
    sizes: &[f64],
) -> DualState {
    let mut d = *duals;
    match config.storage {
        StorageDual::None => {}
        StorageDual::LongTerm { soft_capacity } => {
            d = dual_update_capacity(&d, cached_volume(actions, sizes), soft_capacity);
        }
        StorageDual::Stability => d = dual_update_stability(&d, actions, states, sizes),
    }
    if let Some(b) = config.backhaul_budget {
        d = dual_update_backhaul(&d, fetched_volume(actions, sizes), b);
    }
    d
}

/// Projection key of a file given per-action scores.
pub fn projection_key<F: Fn(ActionPair) -> f64>(
    kind: ProjectionKey,
    state: SlotState,
    score: F,
) -> f64 {
    let best = |cache: bool| {
        crate::model::feasible_actions(state)
            .iter()
            .filter(|a| a.cache == cache)
            .map(|&a| score(a))
            .fold(f64::INFINITY, f64::min)
    };
    match kind {
        ProjectionKey::Score => best(true),
        ProjectionKey::Advantage => best(true) - best(false),
    }
}

/// Per-file inputs of one MQ-learning slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FileSlot {
    pub state: SlotState,
    pub prices: PriceSample,
    pub next: NextSlot,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MqOutcome {
    /// Executed actions, after projection.
    pub actions: Vec<ActionPair>,
    /// Actions proposed before projection.
    pub proposed: Vec<ActionPair>,
    /// Slot cost at the raw prices.
    pub cost: f64,
    /// Slot cost including the storage surcharge `μ̂·a·σ`.
    pub augmented_cost: f64,
    /// Multipliers in force during the slot.
    pub duals: DualState,
}

/// One slot of multiplier-aware Q-learning over all files.
///
/// Files choose ε-greedily under augmented prices, the multipliers are
/// updated, the hard capacity is enforced, and each file's visited factor is
/// trained on its executed action. `rngs` holds one exploration stream per
/// file.
#[allow(clippy::too_many_arguments)]
pub fn mq_learning_step<R: Rng>(
    tables: &mut [QEstimate],
    slots: &[FileSlot],
    duals: &mut DualState,
    config: &CapacityConfig,
    discount: f64,
    epsilon: f64,
    rngs: &mut [R],
) -> MqOutcome {
    assert_eq!(tables.len(), slots.len());
    assert_eq!(rngs.len(), slots.len());
    let current = *duals;
    let states: Vec<SlotState> = slots.iter().map(|f| f.state).collect();
    let sizes: Vec<f64> = slots.iter().map(|f| f.size).collect();

    let mut proposed = Vec::with_capacity(slots.len());
    let mut aug = Vec::with_capacity(slots.len());
    for ((table, f), rng) in tables.iter_mut().zip(slots).zip(rngs.iter_mut()) {
        let p = augment_prices(f.prices, f.size, &current);
        table.observe_prices(p);
        proposed.push(table.select(f.state, p, epsilon, rng));
        aug.push(p);
    }

    if config.dual_timing == DualTiming::Proposed {
        *duals = update_duals(&current, config, &proposed, &states, &sizes);
    }

    let actions = match config.hard_capacity {
        Some(m) => {
            let candidates: Vec<Candidate> = slots
                .iter()
                .enumerate()
                .map(|(i, f)| Candidate {
                    action: proposed[i],
                    key: projection_key(config.projection_key, f.state, |a| {
                        tables[i].score(f.state, a, aug[i])
                    }),
                    size: f.size,
                    state: f.state,
                })
                .collect();
            project_c4(&candidates, m)
        }
        None => proposed.clone(),
    };

    if config.dual_timing == DualTiming::Executed {
        *duals = update_duals(&current, config, &actions, &states, &sizes);
    }

    let mut cost = 0.0;
    let mut augmented_cost = 0.0;
    for (i, f) in slots.iter().enumerate() {
        let c = instantaneous_cost(actions[i], f.prices);
        cost += c;
        augmented_cost += c + if actions[i].cache { current.mu_hat * f.size } else { 0.0 };
        let next = NextSlot {
            request: f.next.request,
            prices: augment_prices(f.next.prices, f.size, duals),
        };
        tables[i].update(f.state, actions[i], next, discount);
    }

    MqOutcome { actions, proposed, cost, augmented_cost, duals: current }
}
