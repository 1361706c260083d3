//! The maximizer's optimal response to the barrier strategy, its termination
//! time, and the saddle-point checks for convex holding costs.
//!
//! Against the `beta0`-barrier the adversary's optimal play solves, after an
//! optional start-up delay `delta` during which it does nothing,
//!
//! ```text
//! omega'(t) = -y - sqrt(y^2 - h((x + y t + omega(t)) ∧ (x + y delta)) / c),
//! ```
//!
//! with `omega = 0` on `[0, delta]`, split into components
//! `psi = ((c/c1) omega, -(c/c2) omega)`. The induced state
//! `phi = x + y t + omega` decreases strictly and reaches zero at
//!
//! ```text
//! tau_tilde = delta + ∫_0^{x + y delta} dxi / sqrt(y^2 - h(xi)/c),
//! ```
//!
//! which the quadrature and the ODE compute independently. The delay is
//! needed only in the degenerate configuration `x = beta0` with
//! `y^2 - h(beta0)/c = 0`, where the square root vanishes at the start.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{running_cost, ControlPair, GameParams};
use crate::numerics::{adaptive_simpson, rk_integrate_to_zero};
use crate::path::{MonotonePath, PiecewisePath};
use crate::value::{free_boundary, value_g};

/// Radicand values at or below this are treated as the degenerate case.
const DEGENERATE_RADICAND: f64 = 1e-14;

/// Step cap: the ODE grid refines the expected span into this many pieces so
/// the piecewise-linear sample stays within collocation tolerances.
const MIN_STEPS: f64 = 5000.0;

/// The adversary's optimal response path and its components.
#[derive(Debug, Clone)]
pub struct ResponseControl {
    /// net perturbation `omega = psi1 - psi2`, zero on `[0, delta]`
    pub omega: PiecewisePath,
    /// the split `((c/c1) omega, -(c/c2) omega)`
    pub psi: ControlPair,
    /// hitting time of the induced state (ODE route)
    pub tau_tilde: f64,
    pub delta: f64,
}

fn validate_response_inputs(params: &GameParams, x: f64, delta: f64) -> Result<f64> {
    let fb = free_boundary(params)?;
    if !(0.0..=fb.beta0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, beta0 = {}]", fb.beta0)));
    }
    if delta < 0.0 {
        return Err(Error::Domain(format!("delta = {delta} must be >= 0")));
    }
    if delta > 0.0 && delta > x {
        return Err(Error::Domain(format!("delta = {delta} must not exceed x = {x}")));
    }
    params.h().lipschitz(params.d())?;
    let start = x + params.y() * delta;
    if start < 0.0 {
        // the state would cross zero during the delay, ending the game early
        return Err(Error::Domain(format!(
            "delta = {delta} drives the free motion past the origin; need delta <= x/(-y) = {}",
            x / -params.y()
        )));
    }
    let rad_start = params.y() * params.y() - params.h().eval(start) / params.c();
    if start > 0.0 && rad_start <= DEGENERATE_RADICAND {
        // only reachable with delta = 0 at x = beta0 when the root vanishes
        return Err(Error::DegenerateResponse);
    }
    Ok(start)
}

/// Termination time `tau_tilde` by adaptive quadrature (absolute tolerance
/// `1e-10`). A start that already sits at the origin (`x + y delta = 0`,
/// including `x = delta = 0`) terminates at `delta` exactly.
pub fn termination_time(params: &GameParams, x: f64, delta: f64) -> Result<f64> {
    let upper = validate_response_inputs(params, x, delta)?;
    if upper == 0.0 {
        return Ok(delta);
    }
    let (c, y) = (params.c(), params.y());
    let h = params.h();
    let integrand = |xi: f64| 1.0 / (y * y - h.eval(xi) / c).max(1e-300).sqrt();
    Ok(delta + adaptive_simpson(&integrand, 0.0, upper, 1e-10))
}

/// Integrates the response ODE with adaptive Runge–Kutta (relative tolerance
/// `1e-10`, step cap keeping the sampled path collocation-accurate) and
/// packages the control. Errors with [`Error::DegenerateResponse`] when the
/// radicand vanishes at the start and `delta = 0`.
pub fn optimal_response(params: &GameParams, x: f64, delta: f64) -> Result<ResponseControl> {
    let start = validate_response_inputs(params, x, delta)?;
    let (c, y) = (params.c(), params.y());
    let h = params.h();

    if start == 0.0 {
        // the free motion alone reaches zero exactly at delta
        let omega = PiecewisePath::zero(delta);
        let psi = ControlPair::zero(delta);
        return Ok(ResponseControl { omega, psi, tau_tilde: delta, delta });
    }

    let tau_quad = termination_time(params, x, delta)?;
    let max_step = ((tau_quad - delta) / MIN_STEPS).max(1e-12);
    let field = move |_t: f64, phi: f64| -(y * y - h.eval(phi.min(start)) / c).max(0.0).sqrt();
    let points = rk_integrate_to_zero(&field, delta, start, 1e-10, max_step, 4_000_000);

    let mut times = Vec::with_capacity(points.len() + 2);
    let mut omega_vals = Vec::with_capacity(points.len() + 2);
    times.push(0.0);
    omega_vals.push(0.0);
    if delta > 0.0 {
        times.push(delta);
        omega_vals.push(0.0);
    }
    for &(t, phi) in points.iter().skip(1) {
        times.push(t);
        omega_vals.push(phi - x - y * t);
    }
    let omega = PiecewisePath::new(times, omega_vals)?;
    let tau_tilde = *points.last().map(|(t, _)| t).unwrap();
    let psi = ControlPair::new(
        omega.scaled(c / params.c1()),
        omega.scaled(-c / params.c2()),
    )?;
    Ok(ResponseControl { omega, psi, tau_tilde, delta })
}

/// Saddle-point verification report.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub min_cost: f64,
    /// `U(x) = g(x)`
    pub value: f64,
    pub passed: bool,
    /// trial index attaining `min_cost` (0 is the deterministic `rho = 0`
    /// trial)
    pub worst_trial: u64,
    /// linear `h` is accepted although the saddle proof assumes smooth
    /// convexity; flagged for the record
    pub linear_h_accepted: bool,
    pub trials: u64,
}

fn convexity_gate(params: &GameParams) -> Result<()> {
    if !params.h().is_convex() {
        return Err(Error::NonConvexHolding(format!("{:?}", params.h())));
    }
    Ok(())
}

/// Cost of the hitting game when the adversary plays `psi` against an
/// explicit rejection control.
fn hitting_cost_against(params: &GameParams, x: f64, psi: &ControlPair, rho: &MonotonePath) -> Result<f64> {
    let tau = crate::model::hitting_time(x, params, psi, rho)?;
    if !tau.is_finite() {
        return Err(Error::NoFiniteHitting);
    }
    Ok(running_cost(x, params, tau, psi, &MonotonePath::zero(), rho)?.total)
}

/// Plays the optimal response `psi*` against `n_trials` random rejection
/// controls (plus the deterministic `rho = 0` trial) and checks that no
/// rejection pattern drops the adversary's payoff below `g(x) - 1e-6`.
///
/// Random controls jump by `U[0, x/2]` at time zero and add at most five
/// nonnegative ramps with total mass at most `x/2`, so the state stays
/// nonnegative until the hit. Each trial draws from `seed + index`, making
/// the sweep order-independent and parallel.
pub fn saddle_check(params: &GameParams, x: f64, n_trials: u64, seed: u64) -> Result<SaddleReport> {
    convexity_gate(params)?;
    let fb = free_boundary(params)?;
    if !(0.0..fb.beta0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, beta0 = {}) required by the saddle property", fb.beta0)));
    }
    let response = optimal_response(params, x, 0.0)?;
    let value = value_g(params, x)?;
    let tau_free = response.tau_tilde;

    let costs: Vec<(u64, f64)> = (0..=n_trials)
        .into_par_iter()
        .map(|trial| {
            let rho = if trial == 0 {
                MonotonePath::zero()
            } else {
                random_rejection(seed, trial, x, tau_free)
            };
            let cost = hitting_cost_against(params, x, &response.psi, &rho)
                .expect("free motion reaches zero, so every nonnegative rejection terminates");
            (trial, cost)
        })
        .collect();

    let (worst_trial, min_cost) = costs
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    Ok(SaddleReport {
        min_cost,
        value,
        passed: min_cost >= value - 1e-6,
        worst_trial,
        linear_h_accepted: params.h().is_linear(),
        trials: n_trials,
    })
}

fn random_rejection(seed: u64, trial: u64, x: f64, horizon: f64) -> MonotonePath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial));
    let jump0 = rng.gen_range(0.0..=0.5 * x);
    let n_ramps = rng.gen_range(0..=5usize);
    if n_ramps == 0 || horizon <= 0.0 {
        return MonotonePath::constant_jump(jump0);
    }
    let budget: f64 = rng.gen_range(0.0..=0.5 * x);
    let raw: Vec<(f64, f64)> = (0..n_ramps)
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.05..1.0)))
        .collect();
    let total_time: f64 = raw.iter().map(|r| r.1).sum();
    let time_scale = horizon / total_time;
    let raw_mass: f64 = raw.iter().map(|r| r.0 * r.1 * time_scale).sum();
    let mass_scale = if raw_mass > 0.0 { budget / raw_mass } else { 0.0 };
    let ramps: Vec<(f64, f64)> = raw
        .iter()
        .map(|&(s, d)| (s * mass_scale, d * time_scale))
        .collect();
    MonotonePath::from_ramps(jump0, &ramps).expect("scaled ramps are nonnegative")
}

/// One row of the rejection profile `F(p) = cost of psi* against the
/// jump-`p`-at-zero control`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RejectionPoint {
    pub p: f64,
    pub cost: f64,
}

/// The profile `F` on a grid of rejection sizes, with `F(0) = g(x)` first.
#[derive(Debug, Clone, Serialize)]
pub struct RejectionProfile {
    pub rows: Vec<RejectionPoint>,
    /// `F(0)`, the no-rejection cost
    pub base: f64,
    /// whether `F(p) >= F(0) - tol` held across the grid at `tol = 1e-6`
    pub monotone_from_base: bool,
}

/// Evaluates `F(p)` for each `p` in the grid (`0 <= p <= x` required) by
/// playing the optimal response against the constant-after-jump control.
pub fn rejection_profile(params: &GameParams, x: f64, p_grid: &[f64]) -> Result<RejectionProfile> {
    convexity_gate(params)?;
    let fb = free_boundary(params)?;
    if !(0.0..fb.beta0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, beta0 = {})", fb.beta0)));
    }
    for &p in p_grid {
        if !(0.0..=x).contains(&p) {
            return Err(Error::Domain(format!("rejection size p = {p} outside [0, x = {x}]")));
        }
    }
    let response = optimal_response(params, x, 0.0)?;
    let base = hitting_cost_against(params, x, &response.psi, &MonotonePath::zero())?;
    let rows: Vec<RejectionPoint> = p_grid
        .par_iter()
        .map(|&p| {
            let rho = MonotonePath::constant_jump(p);
            let cost = hitting_cost_against(params, x, &response.psi, &rho)
                .expect("jump rejections keep the hitting time finite");
            RejectionPoint { p, cost }
        })
        .collect();
    let monotone_from_base = rows.iter().all(|row| row.cost >= base - 1e-6);
    Ok(RejectionProfile { rows, base, monotone_from_base })
}
