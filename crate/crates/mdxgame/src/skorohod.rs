//! Two-sided Skorohod reflection on an interval, computed exactly for
//! piecewise-linear inputs, and the barrier strategies built from it.
//!
//! The reflection problem on `[a, b]`: given `omega`, find
//! `(phi, eta1, eta2)` with
//!
//! ```text
//! phi = omega + eta1 - eta2,    phi(t) ∈ [a, b],
//! ```
//!
//! `eta_i` nondecreasing, `eta_i(0-) = 0`, `eta1` increasing only where
//! `phi = a` and `eta2` only where `phi = b`. A starting point outside the
//! interval is resolved by a jump at time zero (`omega(0) > b` gives
//! `phi(0) = b`, and symmetrically at `a`).
//!
//! Boundary hit times of a linear segment are roots of linear functions, so
//! instead of a grid recursion the solution is built segment by segment with
//! the exact crossing times inserted as new breakpoints. The pushing terms
//! are maintained through the identity `phi = omega + eta1 - eta2`, which
//! therefore holds at every breakpoint to machine precision.

use crate::engine::Strategy;
use crate::error::{Error, Result};
use crate::model::{ControlPair, GameParams};
use crate::path::{union_times, MonotonePath, PiecewisePath, StatePath};

/// Solution of the reflection problem: constrained path and pushing terms on
/// a common breakpoint partition.
#[derive(Debug, Clone)]
pub struct ReflectionTriple {
    pub phi: StatePath,
    /// lower pushing term (idleness when reflecting game dynamics)
    pub eta1: MonotonePath,
    /// upper pushing term (rejection)
    pub eta2: MonotonePath,
}

#[derive(Clone, Copy, PartialEq)]
enum Contact {
    Interior,
    Lower,
    Upper,
}

/// Reflects `omega` onto `[a, b]`. Requires `a < b`; the input's initial
/// value may lie outside the interval.
pub fn reflect(omega: &PiecewisePath, a: f64, b: f64) -> Result<ReflectionTriple> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!("reflection interval needs a < b, got [{a}, {b}]")));
    }

    let times = omega.times();
    let values = omega.values();
    let w0 = values[0];

    let mut rec = Recorder::with_capacity(times.len() + 8);

    let mut e1 = (a - w0).max(0.0);
    let mut e2 = (w0 - b).max(0.0);
    // assign the boundary value exactly; w0 + (a - w0) need not round to a
    let mut phi = w0.clamp(a, b);
    let mut contact = if phi == a {
        Contact::Lower
    } else if phi == b {
        Contact::Upper
    } else {
        Contact::Interior
    };
    rec.push(0.0, phi, e1, e2);

    for i in 0..times.len() - 1 {
        let (t0, t1) = (times[i], times[i + 1]);
        let s = (values[i + 1] - values[i]) / (t1 - t0);
        let omega_at = |t: f64| values[i] + s * (t - t0);
        let mut t = t0;

        while t < t1 {
            match contact {
                Contact::Lower if s < 0.0 => {
                    // held at a for the rest of the segment
                    e1 = (a + e2 - omega_at(t1)).max(e1);
                    phi = a;
                    rec.push(t1, phi, e1, e2);
                    t = t1;
                }
                Contact::Upper if s > 0.0 => {
                    e2 = (omega_at(t1) + e1 - b).max(e2);
                    phi = b;
                    rec.push(t1, phi, e1, e2);
                    t = t1;
                }
                _ => {
                    // free motion; may leave the boundary or hit the other one
                    let target = phi + s * (t1 - t);
                    if target > b {
                        // rounding of the division may land an ulp past t1
                        let th = (t + (b - phi) / s).min(t1);
                        phi = b;
                        contact = Contact::Upper;
                        rec.push(th, phi, e1, e2);
                        t = th;
                    } else if target < a {
                        let th = (t + (a - phi) / s).min(t1);
                        phi = a;
                        contact = Contact::Lower;
                        rec.push(th, phi, e1, e2);
                        t = th;
                    } else {
                        phi = target;
                        contact = if target == a {
                            Contact::Lower
                        } else if target == b {
                            Contact::Upper
                        } else {
                            Contact::Interior
                        };
                        rec.push(t1, phi, e1, e2);
                        t = t1;
                    }
                }
            }
        }
    }

    rec.into_triple(w0, a, b)
}

/// Shared breakpoint partition for the triple under construction.
struct Recorder {
    t: Vec<f64>,
    phi: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl Recorder {
    fn with_capacity(n: usize) -> Self {
        Recorder { t: Vec::with_capacity(n), phi: Vec::with_capacity(n), e1: Vec::with_capacity(n), e2: Vec::with_capacity(n) }
    }

    fn push(&mut self, t: f64, phi: f64, e1: f64, e2: f64) {
        if let Some(&last_t) = self.t.last() {
            if last_t == t && *self.phi.last().unwrap() == phi && *self.e1.last().unwrap() == e1 && *self.e2.last().unwrap() == e2 {
                return;
            }
        }
        self.t.push(t);
        self.phi.push(phi);
        self.e1.push(e1);
        self.e2.push(e2);
    }

    fn into_triple(self, w0: f64, a: f64, b: f64) -> Result<ReflectionTriple> {
        Ok(ReflectionTriple {
            phi: StatePath::from_points_in_box(w0, self.t.clone(), self.phi, a, b)?,
            eta1: MonotonePath::new(self.t.clone(), self.e1)?,
            eta2: MonotonePath::new(self.t, self.e2)?,
        })
    }
}

/// Reflection onto the degenerate interval `[a, a]`: the constrained path is
/// identically `a` and the pushing terms are the Jordan decomposition of
/// `a - omega`. Used by the 0-barrier strategy; the general [`reflect`]
/// rejects `a == b` by contract.
fn pin_at(omega: &PiecewisePath, a: f64) -> Result<(MonotonePath, MonotonePath)> {
    let times = omega.times();
    let values = omega.values();
    let mut e1 = (a - values[0]).max(0.0);
    let mut e2 = (values[0] - a).max(0.0);
    let mut e1_v = vec![e1];
    let mut e2_v = vec![e2];
    for i in 0..times.len() - 1 {
        let dv = values[i + 1] - values[i];
        if dv > 0.0 {
            e2 += dv;
        } else {
            e1 -= dv;
        }
        e1_v.push(e1);
        e2_v.push(e2);
    }
    Ok((
        MonotonePath::new(times.to_vec(), e1_v)?,
        MonotonePath::new(times.to_vec(), e2_v)?,
    ))
}

/// Strategy that keeps the dynamics in `[0, beta]` by applying the Skorohod
/// map to the free motion `x + y t + psi1 - psi2`: idleness pushes at 0,
/// rejection pushes at `beta`.
#[derive(Debug, Clone)]
pub struct BarrierStrategy {
    beta: f64,
    y: f64,
}

impl BarrierStrategy {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The free (uncontrolled) motion as a path on `[0, horizon]`.
    fn free_path(&self, x: f64, psi: &ControlPair, horizon: f64) -> Result<PiecewisePath> {
        let grid = union_times(&[psi.psi1().times(), psi.psi2().times()], &[horizon]);
        let mut times = Vec::with_capacity(grid.len());
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.iter() {
            if t > horizon {
                break;
            }
            times.push(t);
            values.push(x + self.y * t + psi.net(t));
        }
        if *times.last().unwrap() < horizon {
            times.push(horizon);
            values.push(x + self.y * horizon + psi.net(horizon));
        }
        PiecewisePath::new(times, values)
    }
}

impl Strategy for BarrierStrategy {
    fn respond(&self, x: f64, psi: &ControlPair, horizon: f64) -> Result<(MonotonePath, MonotonePath)> {
        let omega = self.free_path(x, psi, horizon.max(0.0))?;
        if self.beta == 0.0 {
            pin_at(&omega, 0.0)
        } else {
            let triple = reflect(&omega, 0.0, self.beta)?;
            Ok((triple.eta1, triple.eta2))
        }
    }

    fn describe(&self) -> String {
        format!("barrier({})", self.beta)
    }
}

/// Builds a `beta`-barrier strategy for the given game. `beta` must lie in
/// `[0, D]`.
pub fn barrier_strategy(beta: f64, params: &GameParams) -> Result<BarrierStrategy> {
    if !(0.0..=params.d()).contains(&beta) {
        return Err(Error::Domain(format!(
            "barrier level beta = {beta} outside [0, {}]",
            params.d()
        )));
    }
    Ok(BarrierStrategy { beta, y: params.y() })
}
