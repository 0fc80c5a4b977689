//! Optimal fetch/cache decisions for an edge cache under dynamic storage
//! and fetching prices.
//!
//! ```
//! use edgecache::env::{default_price_model, CatalogFile};
//! use edgecache::planning::{value_iteration, FileModel};
//! use edgecache::{bellman_decide, PriceSample, SlotState};
//!
//! let file = CatalogFile::single(0.5, default_price_model(2.0)?, default_price_model(44.0)?)?;
//! let model = FileModel::from_file(&file, 0.9)?;
//! let dv = value_iteration(&model, 1e-9).marginal_cost(0.9);
//! let action = bellman_decide(SlotState::new(true, false), PriceSample::new(2.1, 40.0), dv);
//! assert!(action.fetch);
//! # Ok::<(), edgecache::Error>(())
//! ```

pub mod env;
pub mod error;
pub mod experiment;
pub mod learning;
pub mod model;
pub mod planning;
pub mod pricing;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    bellman_decide, feasible_actions, instantaneous_cost, reduced_actions, ActionPair,
    MarginalFutureCost, PriceSample, SlotState, ValueTable,
};
