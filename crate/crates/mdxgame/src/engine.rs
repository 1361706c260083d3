//! Strategy abstraction and game evaluation.
//!
//! A strategy is a causal map from the adversary's paths to the controller's
//! pair `(zeta, rho)`: its output on `[0, t]` may depend on `psi` only
//! through `psi` on `[0, t]`. The engine evaluates both game forms against a
//! strategy and provides the two adversarial witnesses: the divergence
//! control that blows up the cost when the value is infinite, and the
//! no-jump control showing that failing to reject immediately above the
//! rejection threshold is suboptimal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    assemble_dynamics, assemble_dynamics_to, holding_integral, rate_penalty, running_cost,
    ControlPair, CostBreakdown, GameParams,
};
use crate::path::{MonotonePath, PiecewisePath};
use crate::value::free_boundary;

/// Causal map `psi -> (zeta, rho)` for a declared initial condition `x`.
///
/// Contract: for any `t <= horizon`, `respond(x, psi, horizon)` restricted to
/// `[0, t]` equals `respond(x, psi', t)` whenever `psi = psi'` on `[0, t]`.
/// The engine's tests fuzz this with truncate-and-compare.
pub trait Strategy {
    fn respond(&self, x: f64, psi: &ControlPair, horizon: f64) -> Result<(MonotonePath, MonotonePath)>;

    /// Short human-readable label for error messages and reports.
    fn describe(&self) -> String;
}

/// The trivial strategy: never idles, never rejects.
#[derive(Debug, Clone, Default)]
pub struct DoNothing;

impl Strategy for DoNothing {
    fn respond(&self, _x: f64, _psi: &ControlPair, _horizon: f64) -> Result<(MonotonePath, MonotonePath)> {
        Ok((MonotonePath::zero(), MonotonePath::zero()))
    }

    fn describe(&self) -> String {
        "do-nothing".into()
    }
}

/// Cost of the original game at time `T` under a strategy. Errors if the
/// strategy lets the state leave `[0, D]`, identifying the first violation.
pub fn evaluate_original(
    params: &GameParams,
    x: f64,
    strategy: &dyn Strategy,
    psi: &ControlPair,
    t_end: f64,
) -> Result<CostBreakdown> {
    if t_end < 0.0 {
        return Err(Error::Domain(format!("horizon T = {t_end} must be >= 0")));
    }
    let (zeta, rho) = strategy.respond(x, psi, t_end)?;
    let phi = assemble_dynamics_to(x, params, psi, &zeta, &rho, t_end)?;
    if !phi.admissible {
        let (time, value) = phi.first_violation.unwrap();
        return Err(Error::Inadmissible { time, value });
    }
    running_cost(x, params, t_end, psi, &zeta, &rho)
}

/// Outcome of a hitting-time game evaluation.
#[derive(Debug, Clone, Copy)]
pub struct HittingEvaluation {
    pub cost: CostBreakdown,
    /// termination time: first zero of the state
    pub tau: f64,
}

/// First time the no-idleness dynamics under the strategy's rejections cross
/// `level`, together with the rejection control that produced it.
///
/// The strategy is queried on growing horizons until the crossing falls
/// inside the responded range; by causality the restriction to `[0, tau]` is
/// then final.
fn crossing_under_strategy(
    params: &GameParams,
    x: f64,
    strategy: &dyn Strategy,
    psi: &ControlPair,
    level: f64,
) -> Result<(f64, MonotonePath)> {
    let mut horizon = psi.horizon().max(1.0);
    for _ in 0..64 {
        let (_, rho) = strategy.respond(x, psi, horizon)?;
        let phi = assemble_dynamics(x, params, psi, &MonotonePath::zero(), &rho)?;
        match phi.first_time_at_or_below(level, params.y()) {
            Some(tau) if tau <= horizon => return Ok((tau, rho)),
            Some(tau) => horizon = tau + 1.0,
            None => horizon = 2.0 * horizon + 1.0,
        }
    }
    Err(Error::NoFiniteHitting)
}

/// Evaluates the hitting-time game: the strategy contributes only its
/// rejection component, the game stops at the first zero of the state, and
/// the cost is taken there. Errors when the state never reaches zero.
pub fn evaluate_hitting(
    params: &GameParams,
    x: f64,
    strategy: &dyn Strategy,
    psi: &ControlPair,
) -> Result<HittingEvaluation> {
    let (tau, rho) = crossing_under_strategy(params, x, strategy, psi, 0.0)?;
    let cost = running_cost(x, params, tau, psi, &MonotonePath::zero(), &rho)?;
    Ok(HittingEvaluation { cost, tau })
}

/// Result of the divergence witness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DivergenceWitness {
    /// `r (x - D) + (r^2/(4c) + y r) T`: the admissibility-forced floor on
    /// the realized cost (idleness term dropped)
    pub lower_bound: f64,
    pub realized: CostBreakdown,
}

/// Plays the constant-slope control `(r/(2 c1) t, -r/(2 c2) t)` against the
/// strategy up to `T`. When `-y < r/(4c)` the lower bound grows linearly in
/// `T`, certifying an infinite value; the bound holds for every admissible
/// strategy (inadmissible dynamics are evaluated anyway and flagged).
pub fn divergence_witness(
    params: &GameParams,
    x: f64,
    strategy: &dyn Strategy,
    t_end: f64,
) -> Result<DivergenceWitness> {
    if t_end < 0.0 {
        return Err(Error::Domain(format!("horizon T = {t_end} must be >= 0")));
    }
    let r = params.r();
    let psi = ControlPair::new(
        PiecewisePath::linear(r / (2.0 * params.c1()), t_end),
        PiecewisePath::linear(-r / (2.0 * params.c2()), t_end),
    )?;
    let (zeta, rho) = strategy.respond(x, &psi, t_end)?;
    let realized = running_cost(x, params, t_end, &psi, &zeta, &rho)?;
    let lower_bound = r * (x - params.d()) + (r * r / (4.0 * params.c()) + params.y() * r) * t_end;
    Ok(DivergenceWitness { lower_bound, realized })
}

/// Result of the no-jump suboptimality witness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoJumpWitness {
    /// `r (x - beta0 - delta)`: the cost of rejecting down to the threshold
    /// at time zero
    pub threshold: f64,
    /// cost accumulated until the state first drops to `beta0 + delta`
    pub realized_up_to_tau: f64,
    /// that first crossing time
    pub tau: f64,
    /// horizon of the witness control
    pub t_delta: f64,
    pub passed: bool,
}

/// Runs the witness showing that strategies which do not immediately reject
/// from `x > beta0 + delta` pay more than the jump would cost: the adversary
/// plays slopes `(r/(2 c1), -r/(2 c2))` until
/// `T_delta = r (D - beta0) / (h(beta0 + delta) - h(beta0))`, then freezes.
/// Errors with [`Error::WitnessInapplicable`] when the strategy jumps to the
/// threshold at time zero (nothing to refute).
pub fn nojump_witness(
    params: &GameParams,
    x: f64,
    delta: f64,
    strategy: &dyn Strategy,
) -> Result<NoJumpWitness> {
    let fb = free_boundary(params)?;
    let beta0 = fb.beta0;
    if delta <= 0.0 {
        return Err(Error::Domain(format!("delta = {delta} must be > 0")));
    }
    if x > params.d() || x <= beta0 + delta {
        return Err(Error::Domain(format!(
            "witness needs beta0 + delta < x <= D, got x = {x}, beta0 = {beta0}, delta = {delta}"
        )));
    }
    let r = params.r();
    let h = params.h();
    let t_delta = r * (params.d() - beta0) / (h.eval(beta0 + delta) - h.eval(beta0));
    let psi = ControlPair::new(
        PiecewisePath::linear(r / (2.0 * params.c1()), t_delta),
        PiecewisePath::linear(-r / (2.0 * params.c2()), t_delta),
    )?;
    let (tau, rho) = crossing_under_strategy(params, x, strategy, &psi, beta0 + delta)?;
    if tau <= 0.0 {
        return Err(Error::WitnessInapplicable(format!(
            "{} already moves the state to beta0 + delta at time zero",
            strategy.describe()
        )));
    }
    let phi = assemble_dynamics_to(x, params, &psi, &MonotonePath::zero(), &rho, tau)?;
    let holding = holding_integral(h, &phi, tau);
    let realized = holding + r * rho.eval(tau) - rate_penalty(params, &psi, tau)?;
    let threshold = r * (x - beta0 - delta);
    Ok(NoJumpWitness {
        threshold,
        realized_up_to_tau: realized,
        tau,
        t_delta,
        passed: realized > threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holding::HoldingCost;
    use crate::skorohod::barrier_strategy;
    use crate::value::value_g;

    fn r1() -> GameParams {
        GameParams::new(-2.0, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap()
    }

    fn r2() -> GameParams {
        GameParams::new(-0.5, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap()
    }

    #[test]
    fn original_cost_at_time_zero_is_jump_charge() {
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let cost = evaluate_original(&params, 1.5, &strat, &ControlPair::zero(1.0), 0.0).unwrap();
        assert_eq!(cost.total, 0.5);
    }

    #[test]
    fn barrier_absorbs_drift_at_zero_cost() {
        // R1, x = 0, psi = 0: lower reflection gives zeta(t) = 2t, no cost
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let cost = evaluate_original(&params, 0.0, &strat, &ControlPair::zero(1.0), 1.0).unwrap();
        assert_eq!(cost.total, 0.0);
    }

    #[test]
    fn barrier_initial_jump_plus_holding() {
        // R1, x = 1.5, T = 1: rejection 0.5 at zero, holding ∫_0^0.5 (1-2t) dt = 0.25
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let cost = evaluate_original(&params, 1.5, &strat, &ControlPair::zero(1.0), 1.0).unwrap();
        assert!((cost.total - 0.75).abs() < 1e-12);
        let bound = value_g(&params, 1.5).unwrap();
        assert!(cost.total <= bound + 1e-12);
    }

    #[test]
    fn inadmissible_strategy_reports_first_violation() {
        // do-nothing from x = 1 under drift -2 leaves the box at the bottom
        let params = r1();
        let err = evaluate_original(&params, 1.0, &DoNothing, &ControlPair::zero(1.0), 1.0).unwrap_err();
        match err {
            Error::Inadmissible { time, value } => {
                assert_eq!(time, 1.0);
                assert_eq!(value, -1.0);
            }
            other => panic!("expected inadmissible, got {other}"),
        }
    }

    #[test]
    fn hitting_equals_hand_integral_for_zero_psi() {
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let ev = evaluate_hitting(&params, 0.5, &strat, &ControlPair::zero(1.0)).unwrap();
        assert_eq!(ev.tau, 0.25);
        assert!((ev.cost.total - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn hitting_at_origin_is_trivial() {
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let ev = evaluate_hitting(&params, 0.0, &strat, &ControlPair::zero(1.0)).unwrap();
        assert_eq!(ev.tau, 0.0);
        assert_eq!(ev.cost.total, 0.0);
    }

    #[test]
    fn hitting_never_terminating_errors() {
        // y = 0, do-nothing, constant state
        let params = GameParams::new(0.0, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap();
        assert!(matches!(
            evaluate_hitting(&params, 1.0, &DoNothing, &ControlPair::zero(1.0)),
            Err(Error::NoFiniteHitting)
        ));
    }

    #[test]
    fn divergence_bound_grows_for_infinite_value() {
        // R2: growth slope r^2/(4c) + y r = 1 - 0.5 = 0.5 per unit time
        let params = r2();
        let strat = barrier_strategy(0.0, &params).unwrap();
        let w = divergence_witness(&params, 1.0, &strat, 100.0).unwrap();
        assert!((w.lower_bound - (1.0 * (1.0 - 2.0) + 0.5 * 100.0)).abs() < 1e-12);
        assert!(w.realized.total >= w.lower_bound - 1e-6);
    }

    #[test]
    fn divergence_bound_decreases_when_finite() {
        // R1: slope r^2/(4c) + y r = 1 - 2 = -1 < 0
        let params = r1();
        let w0 = divergence_witness(&params, 1.0, &DoNothing, 0.0).unwrap();
        assert_eq!(w0.lower_bound, -1.0); // r (x - D) at T = 0
        let w1 = divergence_witness(&params, 1.0, &DoNothing, 5.0).unwrap();
        assert!(w1.lower_bound < w0.lower_bound);
    }

    #[test]
    fn nojump_witness_thresholds() {
        // R1, x = 1.5, delta = 0.1: T_delta = 10, threshold 0.4
        let params = r1();
        let w = nojump_witness(&params, 1.5, 0.1, &DoNothing).unwrap();
        assert!((w.t_delta - 10.0).abs() < 1e-12);
        assert!((w.threshold - 0.4).abs() < 1e-12);
        assert!(w.passed, "do-nothing must exceed the jump cost, got {}", w.realized_up_to_tau);
        assert!(w.realized_up_to_tau > 0.4);

        // x = 1.2, delta = 0.05: threshold 0.15
        let w2 = nojump_witness(&params, 1.2, 0.05, &DoNothing).unwrap();
        assert!((w2.threshold - 0.15).abs() < 1e-12);
    }

    #[test]
    fn nojump_witness_rejects_jumping_strategy() {
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        assert!(matches!(
            nojump_witness(&params, 1.5, 0.1, &strat),
            Err(Error::WitnessInapplicable(_))
        ));
    }

    #[test]
    fn causality_of_barrier_responses() {
        // identical psi on [0, t] must give identical output on [0, t]
        let params = r1();
        let strat = barrier_strategy(1.0, &params).unwrap();
        let psi = ControlPair::new(
            PiecewisePath::from_segments(0.0, &[(3.0, 0.4), (-2.0, 0.6), (1.0, 1.0)]).unwrap(),
            PiecewisePath::from_segments(0.0, &[(-1.0, 1.0), (0.5, 1.0)]).unwrap(),
        )
        .unwrap();
        let (zeta_full, rho_full) = strat.respond(0.5, &psi, 2.0).unwrap();
        for t_cut in [0.3, 0.7, 1.0, 1.5] {
            let (zeta_cut, rho_cut) = strat.respond(0.5, &psi.truncated(t_cut), t_cut).unwrap();
            for k in 0..=20 {
                let t = t_cut * k as f64 / 20.0;
                assert!((zeta_full.eval(t) - zeta_cut.eval(t)).abs() < 1e-12);
                assert!((rho_full.eval(t) - rho_cut.eval(t)).abs() < 1e-12);
            }
        }
    }
}
