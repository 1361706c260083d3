//! Solver and verification library for a one-dimensional zero-sum game with
//! reflected dynamics.
//!
//! A minimizing controller steers a state on `[0, D]` with idleness and
//! rejection controls while an adversary perturbs the drift at a quadratic
//! action price and chooses when to stop. The library computes the game's
//! free boundary and explicit value function, evaluates costs under
//! arbitrary piecewise-linear controls and causal strategies, constructs the
//! optimal barrier strategy and the adversary's optimal response, and
//! reduces critically loaded multiclass instances to the one-dimensional
//! workload game.
//!
//! Module map:
//! - [`path`]: exact piecewise-linear path algebra (no discretization).
//! - [`holding`]: holding-cost shapes.
//! - [`model`]: game parameters, action functional, dynamics, costs.
//! - [`skorohod`]: two-sided reflection on an interval; barrier strategies.
//! - [`value`]: finiteness, free boundary, explicit value, Bellman
//!   residuals, smoothing sequence.
//! - [`engine`]: strategy abstraction, game evaluation, adversarial
//!   witnesses.
//! - [`adversary`]: the maximizer's optimal response ODE and saddle checks.
//! - [`collapse`]: multiclass-to-workload state-space collapse.

pub mod adversary;
pub mod collapse;
pub mod engine;
pub mod error;
pub mod holding;
pub mod model;
pub mod numerics;
pub mod path;
pub mod skorohod;
pub mod value;

pub use error::{Error, Result};
pub use holding::HoldingCost;
pub use model::{ControlPair, CostBreakdown, GameParams};
pub use path::{MonotonePath, PiecewisePath, StatePath};
