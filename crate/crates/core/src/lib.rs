//! Hybrid pricing for a TV-white-space database operator.
//!
//! The operator reserves part of the band for registered SUs at a flat fee
//! and sells query plans on the rest. This crate models the SUs'
//! registration game, designs the plan menus, predicts registration counts
//! and searches the `(reserved bandwidth, fee)` grid for the most profitable
//! price point.

pub mod contract;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod game;
pub mod model;
pub mod optimizer;

pub use error::{Error, Result};
pub use exec::Execution;
pub use game::{GameContext, Information};
pub use model::{
    CostModel, EquilibriumOutcome, MarketConfig, Plan, PlanMenu, PricePoint, Scheme,
    StrategyProfile, TypeProfile, TOL,
};
pub use optimizer::{GridResult, PointEvaluation, Scenario};
