//! States, actions, feasibility and the per-file Bellman decision rule.
//!
//! Every file is handled independently. At the start of a slot the cache
//! observes whether the file is requested (`request`) and whether a copy is
//! held locally (`cached`), together with the storage price ρ and the fetch
//! price λ of that slot. It then decides whether to fetch the file over the
//! back-haul (`fetch`) and whether to keep a copy for the next slot (`cache`).

use std::fmt;

use serde::{Deserialize, Serialize};

/// Observable per-file state at the start of a slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotState {
    pub request: bool,
    pub cached: bool,
}

impl SlotState {
    /// All four states in `(request, cached)` lexicographic order.
    pub const ALL: [SlotState; 4] = [
        SlotState::new(false, false),
        SlotState::new(false, true),
        SlotState::new(true, false),
        SlotState::new(true, true),
    ];

    pub const fn new(request: bool, cached: bool) -> Self {
        Self { request, cached }
    }

    /// Dense index `2·r + s` in `0..4`.
    pub const fn index(self) -> usize {
        (self.request as usize) * 2 + self.cached as usize
    }

    pub const fn from_index(i: usize) -> Self {
        Self::new(i & 2 != 0, i & 1 != 0)
    }
}

impl fmt::Display for SlotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(r={}, s={})", self.request as u8, self.cached as u8)
    }
}

/// Per-file decision for one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionPair {
    pub fetch: bool,
    pub cache: bool,
}

impl ActionPair {
    pub const IDLE: ActionPair = ActionPair::new(false, false);
    pub const KEEP: ActionPair = ActionPair::new(false, true);
    pub const FETCH: ActionPair = ActionPair::new(true, false);
    pub const FETCH_AND_CACHE: ActionPair = ActionPair::new(true, true);

    /// All four pairs in `(fetch, cache)` lexicographic order.
    pub const ALL: [ActionPair; 4] = [Self::IDLE, Self::KEEP, Self::FETCH, Self::FETCH_AND_CACHE];

    pub const fn new(fetch: bool, cache: bool) -> Self {
        Self { fetch, cache }
    }

    /// Dense index `2·w + a` in `0..4`.
    pub const fn index(self) -> usize {
        (self.fetch as usize) * 2 + self.cache as usize
    }

    pub const fn from_index(i: usize) -> Self {
        Self::new(i & 2 != 0, i & 1 != 0)
    }
}

impl fmt::Display for ActionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(w={}, a={})", self.fetch as u8, self.cache as u8)
    }
}

/// Storage and fetch prices revealed at the start of a slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSample {
    /// ρ, paid when the file is kept for the next slot.
    pub store: f64,
    /// λ, paid when the file is fetched over the back-haul.
    pub fetch: f64,
}

impl PriceSample {
    pub const fn new(store: f64, fetch: f64) -> Self {
        Self { store, fetch }
    }

    pub fn is_valid(&self) -> bool {
        self.store >= 0.0 && self.fetch >= 0.0
    }
}

/// Reduced value function: expected optimal cost-to-go for each cache bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub v0: f64,
    pub v1: f64,
}

impl ValueTable {
    pub const fn new(v0: f64, v1: f64) -> Self {
        Self { v0, v1 }
    }

    pub fn get(&self, cached: bool) -> f64 {
        if cached {
            self.v1
        } else {
            self.v0
        }
    }

    /// `γ·(V̄₀ − V̄₁)`: the discounted saving of entering the next slot with
    /// the file already cached.
    pub fn marginal_cost(&self, discount: f64) -> MarginalFutureCost {
        MarginalFutureCost(discount * (self.v0 - self.v1))
    }

    pub fn max_abs_diff(&self, other: &ValueTable) -> f64 {
        (self.v0 - other.v0).abs().max((self.v1 - other.v1).abs())
    }
}

/// Discounted future saving from caching, `ΔV̄ = γ·(V̄₀ − V̄₁)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MarginalFutureCost(pub f64);

impl MarginalFutureCost {
    pub const ZERO: MarginalFutureCost = MarginalFutureCost(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

const FEASIBLE_00: [ActionPair; 3] =
    [ActionPair::IDLE, ActionPair::FETCH, ActionPair::FETCH_AND_CACHE];
const FEASIBLE_10: [ActionPair; 2] = [ActionPair::FETCH, ActionPair::FETCH_AND_CACHE];
const FEASIBLE_ANY: [ActionPair; 4] = ActionPair::ALL;

/// Non-dominated actions per state, indexed by [`SlotState::index`].
const REDUCED: [[ActionPair; 2]; 4] = [
    // (r=0, s=0): fetching without caching pays λ and leaves the state unchanged.
    [ActionPair::IDLE, ActionPair::FETCH_AND_CACHE],
    // (r=0, s=1): fetching a file that is already local only adds λ.
    [ActionPair::IDLE, ActionPair::KEEP],
    // (r=1, s=0): the request forces a fetch.
    [ActionPair::FETCH, ActionPair::FETCH_AND_CACHE],
    // (r=1, s=1): served from the cache.
    [ActionPair::IDLE, ActionPair::KEEP],
];

/// Whether `action` satisfies `r ≤ w + s` and `a ≤ s + w` in `state`.
pub fn is_feasible(state: SlotState, action: ActionPair) -> bool {
    let serves = !state.request || action.fetch || state.cached;
    let has_copy = !action.cache || state.cached || action.fetch;
    serves && has_copy
}

/// Every feasible action for `state`, in lexicographic `(w, a)` order.
pub fn feasible_actions(state: SlotState) -> &'static [ActionPair] {
    match (state.request, state.cached) {
        (false, false) => &FEASIBLE_00,
        (true, false) => &FEASIBLE_10,
        (_, true) => &FEASIBLE_ANY,
    }
}

/// The two non-dominated feasible actions for `state`.
pub fn reduced_actions(state: SlotState) -> &'static [ActionPair; 2] {
    &REDUCED[state.index()]
}

/// `ρ·a + λ·w`.
pub fn instantaneous_cost(action: ActionPair, prices: PriceSample) -> f64 {
    let mut cost = 0.0;
    if action.cache {
        cost += prices.store;
    }
    if action.fetch {
        cost += prices.fetch;
    }
    cost
}

/// Optimal action given the marginal future cost of not holding the file.
///
/// Caches whenever the saving `ΔV̄` covers the price of ending the slot with
/// a copy; equality resolves to caching.
pub fn bellman_decide(
    state: SlotState,
    prices: PriceSample,
    delta_v: MarginalFutureCost,
) -> ActionPair {
    let dv = delta_v.0;
    match (state.request, state.cached) {
        (false, false) => {
            let prefetch = dv >= prices.fetch + prices.store;
            ActionPair::new(prefetch, prefetch)
        }
        (false, true) | (true, true) => ActionPair::new(false, dv >= prices.store),
        (true, false) => ActionPair::new(true, dv >= prices.store),
    }
}
