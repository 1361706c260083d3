//! Game data and cost functionals.
//!
//! The one-dimensional game: an adversary picks a pair of perturbation paths
//! `psi = (psi1, psi2)` and a horizon, the controller picks nondecreasing
//! `zeta` (idleness) and `rho` (rejection), and the state is
//!
//! ```text
//! phi(t) = x + y t + psi1(t) - psi2(t) + zeta(t) - rho(t),
//! ```
//!
//! constrained to `[0, D]`. The running payoff collected by the adversary is
//!
//! ```text
//! c(x, T, psi, zeta, rho) = ∫_0^T h(phi) dt + r rho(T) - I(T, psi),
//! ```
//!
//! where the quadratic action `I(T, psi) = ∫_0^T (c1 psi1'^2 + c2 psi2'^2) dt`
//! prices the perturbation. The hitting-time variant drops `zeta` and stops
//! at the first zero of the state.
//!
//! All inputs are piecewise-linear, so every quantity here is computed
//! segment-exactly; only non-linear holding costs use quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holding::HoldingCost;
use crate::numerics::adaptive_simpson;
use crate::path::{union_times, MonotonePath, PiecewisePath, StatePath};

/// Absolute tolerance for the holding integral when `h` is not linear.
const HOLDING_QUAD_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Constants of the one-dimensional game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameParamsJson", into = "GameParamsJson")]
pub struct GameParams {
    y: f64,
    c1: f64,
    c2: f64,
    r: f64,
    d: f64,
    h: HoldingCost,
    /// harmonic combination `(c1^-1 + c2^-1)^-1`, fixed at construction
    c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameParamsJson {
    y: f64,
    c1: f64,
    c2: f64,
    r: f64,
    #[serde(rename = "D")]
    d: f64,
    h: HoldingCost,
}

impl TryFrom<GameParamsJson> for GameParams {
    type Error = Error;
    fn try_from(raw: GameParamsJson) -> Result<Self> {
        GameParams::new(raw.y, raw.c1, raw.c2, raw.r, raw.d, raw.h)
    }
}

impl From<GameParams> for GameParamsJson {
    fn from(p: GameParams) -> Self {
        GameParamsJson { y: p.y, c1: p.c1, c2: p.c2, r: p.r, d: p.d, h: p.h }
    }
}

impl GameParams {
    pub fn new(y: f64, c1: f64, c2: f64, r: f64, d: f64, h: HoldingCost) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("drift y = {y} must be finite")));
        }
        for (name, v) in [("c1", c1), ("c2", c2), ("r", r), ("D", d)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        h.validate()?;
        let c = 1.0 / (1.0 / c1 + 1.0 / c2);
        Ok(Self { y, c1, c2, r, d, h, c })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `(c1^-1 + c2^-1)^-1`, read-only.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Buffer size `D`.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn h(&self) -> &HoldingCost {
        &self.h
    }
}

/// The adversary's pair `psi = (psi1, psi2)`; both components start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ControlPairJson", into = "ControlPairJson")]
pub struct ControlPair {
    psi1: PiecewisePath,
    psi2: PiecewisePath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ControlPairJson {
    psi1: PiecewisePath,
    psi2: PiecewisePath,
}

impl TryFrom<ControlPairJson> for ControlPair {
    type Error = Error;
    fn try_from(raw: ControlPairJson) -> Result<Self> {
        ControlPair::new(raw.psi1, raw.psi2)
    }
}

impl From<ControlPair> for ControlPairJson {
    fn from(p: ControlPair) -> Self {
        ControlPairJson { psi1: p.psi1, psi2: p.psi2 }
    }
}

impl ControlPair {
    pub fn new(psi1: PiecewisePath, psi2: PiecewisePath) -> Result<Self> {
        if psi1.values()[0] != 0.0 || psi2.values()[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "perturbation paths must start at 0 (the action functional is finite only there)".into(),
            ));
        }
        Ok(Self { psi1, psi2 })
    }

    pub fn zero(horizon: f64) -> Self {
        Self { psi1: PiecewisePath::zero(horizon), psi2: PiecewisePath::zero(horizon) }
    }

    pub fn psi1(&self) -> &PiecewisePath {
        &self.psi1
    }

    pub fn psi2(&self) -> &PiecewisePath {
        &self.psi2
    }

    pub fn horizon(&self) -> f64 {
        self.psi1.horizon().max(self.psi2.horizon())
    }

    /// `psi1(t) - psi2(t)`, the net drift perturbation.
    pub fn net(&self, t: f64) -> f64 {
        self.psi1.eval(t) - self.psi2.eval(t)
    }

    /// Restriction `psi(· ∧ t)` of both components.
    pub fn truncated(&self, t: f64) -> Self {
        Self { psi1: self.psi1.truncated(t), psi2: self.psi2.truncated(t) }
    }
}

/// Itemized game cost. `total = holding + rejection - penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// `∫_0^T h(phi(t)) dt`
    pub holding: f64,
    /// `r · rho(T)`
    pub rejection: f64,
    /// action functional `I(T, psi) >= 0`
    pub penalty: f64,
    pub total: f64,
    /// whether the dynamics stayed in `[0, D]` up to `T`
    pub admissible: bool,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Quadratic action `I(T, psi) = Σ_segments (c1 s1^2 + c2 s2^2) Δt`, exact
/// for piecewise-linear controls. Components shorter than `T` are extended by
/// their last value and contribute nothing there.
pub fn rate_penalty(params: &GameParams, psi: &ControlPair, t_end: f64) -> Result<f64> {
    if t_end < 0.0 {
        return Err(Error::Domain(format!("rate penalty horizon T = {t_end} must be >= 0")));
    }
    if t_end == 0.0 {
        return Ok(0.0);
    }
    let grid = union_times(&[psi.psi1.times(), psi.psi2.times()], &[t_end]);
    let mut total = 0.0;
    let mut prev = 0.0;
    for &t in grid.iter().skip(1) {
        if t > t_end {
            break;
        }
        let mid = 0.5 * (prev + t);
        let s1 = psi.psi1.slope_at(mid);
        let s2 = psi.psi2.slope_at(mid);
        total += (params.c1 * s1 * s1 + params.c2 * s2 * s2) * (t - prev);
        prev = t;
    }
    Ok(total)
}

/// Assembles `phi(t) = x + y t + psi1 - psi2 + zeta - rho` on the union of
/// all input breakpoints, with jump handling and the admissibility flag.
pub fn assemble_dynamics(
    x: f64,
    params: &GameParams,
    psi: &ControlPair,
    zeta: &MonotonePath,
    rho: &MonotonePath,
) -> Result<StatePath> {
    let horizon = psi.horizon().max(zeta.horizon()).max(rho.horizon());
    assemble_dynamics_to(x, params, psi, zeta, rho, horizon)
}

/// Same as [`assemble_dynamics`] but with an explicit final time: inputs are
/// frozen past their own horizons, so past the last breakpoint the state
/// drifts with slope `y`.
pub fn assemble_dynamics_to(
    x: f64,
    params: &GameParams,
    psi: &ControlPair,
    zeta: &MonotonePath,
    rho: &MonotonePath,
    t_end: f64,
) -> Result<StatePath> {
    if !(0.0..=params.d).contains(&x) {
        return Err(Error::Domain(format!("initial condition x = {x} outside [0, {}]", params.d)));
    }
    if t_end < 0.0 {
        return Err(Error::Domain(format!("horizon T = {t_end} must be >= 0")));
    }
    let grid = union_times(
        &[psi.psi1.times(), psi.psi2.times(), zeta.times(), rho.times()],
        &[t_end],
    );
    let free = |t: f64| x + params.y * t + psi.net(t);
    let mut times = Vec::with_capacity(grid.len() + 4);
    let mut values = Vec::with_capacity(grid.len() + 4);
    for &t in grid.iter() {
        if t > t_end {
            break;
        }
        let left = free(t) + zeta.eval_left(t) - rho.eval_left(t);
        let right = free(t) + zeta.eval(t) - rho.eval(t);
        if t == 0.0 {
            // phi(0-) = x is recorded separately as the initial condition
            times.push(0.0);
            values.push(right);
        } else if left != right {
            times.push(t);
            values.push(left);
            times.push(t);
            values.push(right);
        } else {
            times.push(t);
            values.push(right);
        }
    }
    if *times.last().unwrap() < t_end {
        times.push(t_end);
        values.push(free(t_end) + zeta.eval(t_end) - rho.eval(t_end));
    }
    StatePath::from_points(x, times, values, params.d)
}

/// `∫ h(phi) dt` over one linear segment `phi: v0 -> v1` of duration `dt`.
/// Linear `h` integrates in closed form (splitting at a zero crossing, where
/// the extension `h = 0` kicks in); other shapes use adaptive quadrature with
/// budget `tol`.
fn segment_holding(h: &HoldingCost, v0: f64, v1: f64, dt: f64, tol: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if let HoldingCost::Linear { a } = h {
        if v0 <= 0.0 && v1 <= 0.0 {
            return 0.0;
        }
        if v0 >= 0.0 && v1 >= 0.0 {
            return 0.5 * a * (v0 + v1) * dt;
        }
        // one sign change: keep the triangle above zero
        let (pos, span) = if v0 > 0.0 { (v0, v0 - v1) } else { (v1, v1 - v0) };
        return 0.5 * a * pos * (pos / span) * dt;
    }
    if v0 == v1 {
        return h.eval(v0) * dt;
    }
    // change of variables: ∫_0^dt h(phi(t)) dt = dt/(v1-v0) ∫_{v0}^{v1} h(u) du
    let scale = dt / (v1 - v0);
    scale * adaptive_simpson(&|u| h.eval(u), v0, v1, tol / scale.abs())
}

/// `∫_0^T h(phi(t)) dt` for a piecewise-linear state path.
pub fn holding_integral(h: &HoldingCost, phi: &StatePath, t_end: f64) -> f64 {
    let times = phi.times();
    let values = phi.values();
    let n_segs = times.len().max(2) - 1;
    let tol = HOLDING_QUAD_TOL / n_segs as f64;
    let mut total = 0.0;
    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        if t0 >= t_end {
            break;
        }
        let t1c = t1.min(t_end);
        if t1c <= t0 {
            continue;
        }
        let v1c = if t1c == t1 {
            values[i + 1]
        } else {
            values[i] + (t1c - t0) * (values[i + 1] - values[i]) / (t1 - t0)
        };
        total += segment_holding(h, values[i], v1c, t1c - t0, tol);
    }
    // constant extension past the last breakpoint
    if t_end > phi.horizon() {
        total += h.eval(*values.last().unwrap()) * (t_end - phi.horizon());
    }
    total
}

/// Cost of the original game up to time `T`. Inadmissible dynamics are
/// flagged in the result, not rejected: the suboptimality witnesses evaluate
/// them on purpose.
pub fn running_cost(
    x: f64,
    params: &GameParams,
    t_end: f64,
    psi: &ControlPair,
    zeta: &MonotonePath,
    rho: &MonotonePath,
) -> Result<CostBreakdown> {
    let phi = assemble_dynamics_to(x, params, psi, zeta, rho, t_end)?;
    let holding = holding_integral(&params.h, &phi, t_end);
    let rejection = params.r * rho.eval(t_end);
    let penalty = rate_penalty(params, psi, t_end)?;
    Ok(CostBreakdown {
        holding,
        rejection,
        penalty,
        total: holding + rejection - penalty,
        admissible: phi.admissible,
    })
}

/// First time the no-idleness dynamics `x + y t + psi1 - psi2 - rho` reach
/// zero; exact on the crossing segment, extrapolated with slope `y` past the
/// inputs' horizons, `+∞` when the state never comes down.
pub fn hitting_time(x: f64, params: &GameParams, psi: &ControlPair, rho: &MonotonePath) -> Result<f64> {
    let phi = assemble_dynamics(x, params, psi, &MonotonePath::zero(), rho)?;
    Ok(phi
        .first_time_at_or_below(0.0, params.y)
        .unwrap_or(f64::INFINITY))
}

/// Cost of the hitting-time game: [`running_cost`] at `T = tau` with no
/// idleness. Errors when the hitting time is infinite.
pub fn hitting_cost(x: f64, params: &GameParams, psi: &ControlPair, rho: &MonotonePath) -> Result<CostBreakdown> {
    let tau = hitting_time(x, params, psi, rho)?;
    if !tau.is_finite() {
        return Err(Error::NoFiniteHitting);
    }
    running_cost(x, params, tau, psi, &MonotonePath::zero(), rho)
}
