//! Free boundary, explicit value function, Bellman operators, residual
//! verification, and the C¹ smoothing sequence.
//!
//! With `c = (c1^-1 + c2^-1)^-1`, the value is finite exactly when
//! `-y >= r/(4c)`. The Bellman equation
//!
//! ```text
//! max{ L f'(x) - h(x), H f'(x) } = 0,   L p = -p^2/(4c) - y p,   H p = p - r,
//! ```
//!
//! has the free boundary `beta0` solving `r^2/(4c) + r y + h(beta) = 0`
//! (capped at `D` when no root exists below `h(D)`), and the explicit
//! solution
//!
//! ```text
//! g(x) = ∫_0^x 2c(-y - sqrt(y^2 - h(u)/c)) du     for x <= beta0,
//! g(x) = g(beta0) + r (x - beta0)                 for x >  beta0.
//! ```
//!
//! `g` can fail to be differentiable at `beta0`; the kink criterion is
//! `r/(4c) <= -y < (r/(4c) + h(D)/r) ∧ r/(2c)`, in which case the one-sided
//! slopes satisfy `g'_L < g'_R = r` and the smoothing sequence `g_delta`
//! repairs the kink from the left while keeping `L g_delta' - h >= 0`.

use serde::Serialize;
use std::cell::Cell;

use crate::error::{Error, Result};
use crate::holding::HoldingCost;
use crate::model::GameParams;
use crate::numerics::adaptive_simpson;

/// Absolute tolerance for the quadrature route of `g`.
const G_QUAD_TOL: f64 = 1e-11;

/// Half-width of the window around `beta0` in which gradients are resolved
/// by side rather than by formula.
const KINK_WINDOW: f64 = 1e-9;

/// Whether the game value is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Finiteness {
    Finite,
    Infinite,
}

/// Finite iff `-y >= r/(4c)` (the boundary case counts as finite).
pub fn finiteness(params: &GameParams) -> Finiteness {
    if -params.y() < params.r() / (4.0 * params.c()) {
        Finiteness::Infinite
    } else {
        Finiteness::Finite
    }
}

/// How the free boundary was determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryCase {
    /// root of `r^2/(4c) + r y + h(beta) = 0` in `[0, D]`
    InteriorRoot,
    /// equation has no root below `h(D)`; the boundary caps at `D`
    CappedAtD,
    /// value infinite, no boundary defined
    InfiniteValue,
}

/// The free boundary together with the one-sided slopes of `g` there.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FreeBoundary {
    pub beta0: f64,
    pub case: BoundaryCase,
    pub differentiable_at_beta0: bool,
    /// left derivative `g'_L(beta0) = 2c(-y - sqrt(y^2 - h(beta0)/c))`
    pub g_left: f64,
    /// right derivative; equals `r` when `beta0 < D`
    pub g_right: f64,
}

/// Computes the free boundary. Errors when the value is infinite.
pub fn free_boundary(params: &GameParams) -> Result<FreeBoundary> {
    if finiteness(params) == Finiteness::Infinite {
        return Err(Error::InfiniteValue);
    }
    let (r, c, y, d) = (params.r(), params.c(), params.y(), params.d());
    let h = params.h();
    let k = r * r / (4.0 * c) + r * y; // <= 0 given finiteness
    let (beta0, case) = if k < -h.eval(d) {
        (d, BoundaryCase::CappedAtD)
    } else {
        (h.inverse(-k), BoundaryCase::InteriorRoot)
    };
    let radicand = (y * y - h.eval(beta0) / c).max(0.0);
    let g_left = 2.0 * c * (-y - radicand.sqrt());
    let g_right = if beta0 < d { r } else { g_left };
    // kink iff r/(4c) <= -y < (r/(4c) + h(D)/r) ∧ r/(2c); the left inequality
    // is the standing finiteness assumption
    let kink = -y < (r / (4.0 * c) + h.eval(d) / r).min(r / (2.0 * c));
    Ok(FreeBoundary {
        beta0,
        case,
        differentiable_at_beta0: !kink,
        g_left,
        g_right,
    })
}

/// The Bellman operators `(L p, H p) = (-p^2/(4c) - y p, p - r)`.
pub fn bellman_ops(params: &GameParams, p: f64) -> (f64, f64) {
    (-p * p / (4.0 * params.c()) - params.y() * p, p - params.r())
}

fn check_domain(params: &GameParams, x: f64) -> Result<()> {
    if !(0.0..=params.d()).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", params.d())));
    }
    Ok(())
}

/// `g` below the boundary via the closed-form antiderivative, valid for
/// linear `h(u) = a u`:
/// `-2 c y x + (4 c^2 / (3a)) ((y^2 - a x / c)^{3/2} - |y|^3)`.
fn g_below_linear(c: f64, y: f64, a: f64, x: f64) -> f64 {
    let rad = (y * y - a * x / c).max(0.0);
    -2.0 * c * y * x + 4.0 * c * c / (3.0 * a) * (rad.powf(1.5) - y.abs().powi(3))
}

/// `g` below the boundary by adaptive quadrature of the integrand
/// `2c(-y - sqrt(y^2 - h(u)/c))`, asserting the radicand stays nonnegative.
fn g_below_quadrature(params: &GameParams, x: f64) -> Result<f64> {
    let (c, y) = (params.c(), params.y());
    let h = params.h();
    let min_rad = Cell::new(f64::INFINITY);
    let integrand = |u: f64| {
        let rad = y * y - h.eval(u) / c;
        min_rad.set(min_rad.get().min(rad));
        2.0 * c * (-y - rad.max(0.0).sqrt())
    };
    let v = adaptive_simpson(&integrand, 0.0, x, G_QUAD_TOL);
    if min_rad.get() < -1e-10 {
        return Err(Error::Domain(format!(
            "radicand y^2 - h(u)/c dips to {} below the boundary; inconsistent parameters",
            min_rad.get()
        )));
    }
    Ok(v)
}

fn g_below(params: &GameParams, x: f64) -> Result<f64> {
    match params.h() {
        HoldingCost::Linear { a } => Ok(g_below_linear(params.c(), params.y(), *a, x)),
        _ => g_below_quadrature(params, x),
    }
}

/// The explicit value `g(x)`; closed form for linear `h`, quadrature with
/// absolute tolerance `1e-11` otherwise, affine with slope `r` above the
/// boundary.
pub fn value_g(params: &GameParams, x: f64) -> Result<f64> {
    check_domain(params, x)?;
    let fb = free_boundary(params)?;
    if x <= fb.beta0 {
        g_below(params, x)
    } else {
        Ok(g_below(params, fb.beta0)? + params.r() * (x - fb.beta0))
    }
}

/// `g(x)` computed through the quadrature route regardless of the holding
/// cost shape; the independent cross-check of [`value_g`].
pub fn value_g_quadrature(params: &GameParams, x: f64) -> Result<f64> {
    check_domain(params, x)?;
    let fb = free_boundary(params)?;
    if x <= fb.beta0 {
        g_below_quadrature(params, x)
    } else {
        Ok(g_below_quadrature(params, fb.beta0)? + params.r() * (x - fb.beta0))
    }
}

/// Which one-sided derivative to take at the free boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `g'(x)`: the integrand below `beta0`, `r` above, side-resolved within
/// `1e-9` of the boundary. `x = 0` admits only the right derivative.
pub fn value_grad(params: &GameParams, x: f64, side: Side) -> Result<f64> {
    check_domain(params, x)?;
    if x == 0.0 && side == Side::Left {
        return Err(Error::Domain("left derivative undefined at x = 0".into()));
    }
    let fb = free_boundary(params)?;
    if (x - fb.beta0).abs() <= KINK_WINDOW {
        return Ok(match side {
            Side::Left => fb.g_left,
            Side::Right => fb.g_right,
        });
    }
    if x > fb.beta0 {
        return Ok(params.r());
    }
    let (c, y) = (params.c(), params.y());
    let rad = (y * y - params.h().eval(x) / c).max(0.0);
    Ok(2.0 * c * (-y - rad.sqrt()))
}

/// Sampled value function: abscissa, value, one-sided slopes.
#[derive(Debug, Clone, Serialize)]
pub struct ValueRow {
    pub x: f64,
    pub g: f64,
    pub gprime_left: f64,
    pub gprime_right: f64,
}

/// `g` and `g'` sampled on a uniform grid of `[0, D]`.
#[derive(Debug, Clone, Serialize)]
pub struct ValueTable {
    pub rows: Vec<ValueRow>,
}

/// Builds the table on `n >= 2` uniformly spaced points. The sampled values
/// must satisfy `g(0) = 0`, monotonicity, and `g <= r x` up to `1e-10`.
pub fn value_table(params: &GameParams, n: usize) -> Result<ValueTable> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid size {n} must be >= 2")));
    }
    let d = params.d();
    let mut rows = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n {
        let x = d * i as f64 / (n - 1) as f64;
        let g = value_g(params, x)?;
        debug_assert!(g >= prev - 1e-10 && g <= params.r() * x + 1e-10, "value bounds broken at x = {x}");
        prev = g;
        let gprime_right = value_grad(params, x, Side::Right)?;
        let gprime_left = if x == 0.0 { gprime_right } else { value_grad(params, x, Side::Left)? };
        rows.push(ValueRow { x, g, gprime_left, gprime_right });
    }
    Ok(ValueTable { rows })
}

impl ValueTable {
    /// CSV with full double precision (17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,g,gprime_left,gprime_right\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.x, row.g, row.gprime_left, row.gprime_right
            ));
        }
        out
    }
}

/// Residuals of the Bellman equation evaluated along the explicit solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BellmanReport {
    /// `max |L g' - h|` on the inner region `(0, beta0)`
    pub max_inner_residual: f64,
    /// `max (H g')^+` there: how much the gradient constraint is violated
    pub max_h_violation: f64,
    /// `max |H g'|` on the outer region `(beta0, D)`
    pub max_outer_residual: f64,
    /// `max (L g' - h)^+` there
    pub max_outer_l_violation: f64,
    /// one-sided slopes at the boundary when the kink is genuine
    pub kink: Option<(f64, f64)>,
    /// no outer region: `beta0 = D`, so `g` solves the equation classically
    pub classical: bool,
}

/// Evaluates the Bellman residuals on a uniform grid of `grid_size` points,
/// excluding the boundary point itself (and its `1e-9` window).
pub fn bellman_residual(params: &GameParams, grid_size: usize) -> Result<BellmanReport> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!("grid size {grid_size} must be >= 2")));
    }
    let fb = free_boundary(params)?;
    let d = params.d();
    let mut max_inner_residual: f64 = 0.0;
    let mut max_h_violation: f64 = 0.0;
    let mut max_outer_residual: f64 = 0.0;
    let mut max_outer_l_violation: f64 = 0.0;
    for i in 0..grid_size {
        let x = d * i as f64 / (grid_size - 1) as f64;
        if x <= 0.0 || x >= d || (x - fb.beta0).abs() <= KINK_WINDOW {
            continue;
        }
        let p = value_grad(params, x, Side::Right)?;
        let (lp, hp) = bellman_ops(params, p);
        let res_l = lp - params.h().eval(x);
        if x < fb.beta0 {
            max_inner_residual = max_inner_residual.max(res_l.abs());
            max_h_violation = max_h_violation.max(hp);
        } else {
            max_outer_residual = max_outer_residual.max(hp.abs());
            max_outer_l_violation = max_outer_l_violation.max(res_l);
        }
    }
    Ok(BellmanReport {
        max_inner_residual,
        max_h_violation: max_h_violation.max(0.0),
        max_outer_residual,
        max_outer_l_violation: max_outer_l_violation.max(0.0),
        kink: if fb.differentiable_at_beta0 { None } else { Some((fb.g_left, fb.g_right)) },
        classical: fb.case == BoundaryCase::CappedAtD,
    })
}

/// One member `g_delta` of the smoothing sequence: C¹, agrees with `g` up to
/// `x_delta`, follows the interpolating line `l_delta` of the gradient on
/// `(x_delta, beta0]`, and is affine with slope `r` beyond.
#[derive(Debug, Clone)]
pub struct SmoothedValue {
    params: GameParams,
    pub delta: f64,
    pub beta0: f64,
    /// last point in `[beta0 - delta, beta0]` where `l_delta` meets `g'`
    pub x_delta: f64,
    /// line `l_delta(x) = l_at_xd + l_slope (x - x_delta)`
    l_at_xd: f64,
    l_slope: f64,
    g_at_xd: f64,
    g_delta_at_beta0: f64,
}

/// Builds `g_delta` for a kinked instance; `0 < delta < beta0` required.
///
/// `x_delta` is the last crossing of `l_delta` and `g'` on
/// `[beta0 - delta, beta0]`, found by scanning a fine grid from the right and
/// bisecting the bracketing interval (the left endpoint, where the two agree
/// by construction, is the fallback).
pub fn smooth_value(params: &GameParams, delta: f64) -> Result<SmoothedValue> {
    let fb = free_boundary(params)?;
    if fb.differentiable_at_beta0 {
        return Err(Error::AlreadySmooth);
    }
    if !(delta > 0.0 && delta < fb.beta0) {
        return Err(Error::Domain(format!(
            "delta = {delta} must lie in (0, beta0 = {})",
            fb.beta0
        )));
    }
    let beta0 = fb.beta0;
    let left = beta0 - delta;
    let g_prime = |x: f64| value_grad(params, x, Side::Left);
    let gp_left = g_prime(left)?;
    let l_slope = (fb.g_right - gp_left) / delta;
    let line = move |x: f64| gp_left + (x - left) * l_slope;

    // last sign change of l_delta - g' scanning from beta0 leftwards
    let n = 4096;
    let mut x_delta = left;
    let mut bracket = None;
    let mut prev_x = beta0;
    let mut prev_d = fb.g_right - fb.g_left; // > 0 at the kink
    for i in 1..=n {
        let x = beta0 - delta * i as f64 / n as f64;
        let dx = line(x) - g_prime(x)?;
        if dx <= 0.0 {
            bracket = Some((x, prev_x, dx, prev_d));
            break;
        }
        prev_x = x;
        prev_d = dx;
    }
    if let Some((mut lo, mut hi, _, _)) = bracket {
        // d(lo) <= 0 < d(hi): bisect the last crossing
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if line(mid) - g_prime(mid)? <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x_delta = 0.5 * (lo + hi);
    }

    let g_at_xd = value_g(params, x_delta)?;
    let l_at_xd = line(x_delta);
    // ∫_{x_delta}^{beta0} l_delta is exact by the trapezoid rule
    let g_delta_at_beta0 = g_at_xd + 0.5 * (l_at_xd + fb.g_right) * (beta0 - x_delta);
    Ok(SmoothedValue {
        params: params.clone(),
        delta,
        beta0,
        x_delta,
        l_at_xd,
        l_slope,
        g_at_xd,
        g_delta_at_beta0,
    })
}

impl SmoothedValue {
    /// `g_delta(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x <= self.x_delta {
            return value_g(&self.params, x);
        }
        if x <= self.beta0 {
            let l_x = self.l_at_xd + (x - self.x_delta) * self.l_slope;
            return Ok(self.g_at_xd + 0.5 * (self.l_at_xd + l_x) * (x - self.x_delta));
        }
        Ok(self.g_delta_at_beta0 + self.params.r() * (x - self.beta0))
    }

    /// `g_delta'(x)`; equals `r` at and beyond the boundary (exactly at
    /// `beta0`, where the interpolating line ends at `r` by construction).
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if x <= self.x_delta {
            return value_grad(&self.params, x, if x == 0.0 { Side::Right } else { Side::Left });
        }
        if x < self.beta0 {
            return Ok(self.l_at_xd + (x - self.x_delta) * self.l_slope);
        }
        Ok(self.params.r())
    }

    /// `sup |g_delta - g|` on an `n`-point grid of `[0, D]`.
    pub fn sup_distance(&self, n: usize) -> Result<f64> {
        let d = self.params.d();
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let x = d * i as f64 / (n - 1) as f64;
            sup = sup.max((self.eval(x)? - value_g(&self.params, x)?).abs());
        }
        Ok(sup)
    }
}
