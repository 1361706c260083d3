//! Holding-cost functions: continuous, strictly increasing on `[0, D]`,
//! vanishing at zero.
//!
//! Three shapes cover everything the solver needs: linear `a·x`, power
//! `a·x^p`, and convex piecewise-linear (the shape produced by the multiclass
//! workload reduction). Evaluation extends naturally outside `[0, D]` — zero
//! below and the defining formula (last slope for the piecewise shape) above —
//! because suboptimality witnesses deliberately evaluate inadmissible paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::invert_increasing;

/// Holding cost `h` with `h(0) = 0`, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HoldingCost {
    /// `h(x) = a·x`, `a > 0`.
    Linear { a: f64 },
    /// `h(x) = a·x^p`, `a > 0`, `p > 0`.
    Power { a: f64, p: f64 },
    /// Convex piecewise-linear through `knots = [(x_0, v_0), ...]` with
    /// `x_0 = v_0 = 0`, strictly increasing knots and nondecreasing slopes.
    PiecewiseLinearConvex { knots: Vec<(f64, f64)> },
}

impl HoldingCost {
    /// Linear holding cost with unit slope.
    pub fn unit() -> Self {
        HoldingCost::Linear { a: 1.0 }
    }

    /// Validates shape parameters. Convexity of `Power` (`p >= 1`) is *not*
    /// required here; the saddle-point routines enforce it where the theory
    /// needs it.
    pub fn validate(&self) -> Result<()> {
        match self {
            HoldingCost::Linear { a } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidParameter(format!("linear slope a = {a} must be > 0")));
                }
            }
            HoldingCost::Power { a, p } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidParameter(format!("power coefficient a = {a} must be > 0")));
                }
                if !(p.is_finite() && *p > 0.0) {
                    return Err(Error::InvalidParameter(format!("power exponent p = {p} must be > 0")));
                }
            }
            HoldingCost::PiecewiseLinearConvex { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidParameter("piecewise holding cost needs >= 2 knots".into()));
                }
                if knots[0] != (0.0, 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "first knot must be (0, 0), got {:?}",
                        knots[0]
                    )));
                }
                let mut prev_slope = 0.0;
                for (i, w) in knots.windows(2).enumerate() {
                    let (x0, v0) = w[0];
                    let (x1, v1) = w[1];
                    if !(x1.is_finite() && v1.is_finite() && x1 > x0) {
                        return Err(Error::InvalidParameter(format!("knot abscissae must increase strictly at index {i}")));
                    }
                    let slope = (v1 - v0) / (x1 - x0);
                    if slope <= 0.0 {
                        return Err(Error::InvalidParameter(format!("knot values must increase strictly at index {i}")));
                    }
                    if i > 0 && slope < prev_slope * (1.0 - 1e-12) {
                        return Err(Error::InvalidParameter(format!("slopes must be nondecreasing (convex) at index {i}")));
                    }
                    prev_slope = slope;
                }
            }
        }
        Ok(())
    }

    /// `h(x)`, extended by zero below 0 and by the natural formula above the
    /// last knot / beyond `D`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            HoldingCost::Linear { a } => a * x,
            HoldingCost::Power { a, p } => a * x.powf(*p),
            HoldingCost::PiecewiseLinearConvex { knots } => {
                let n = knots.len();
                if x >= knots[n - 1].0 {
                    let (x0, v0) = knots[n - 2];
                    let (x1, v1) = knots[n - 1];
                    return v1 + (x - x1) * (v1 - v0) / (x1 - x0);
                }
                let i = knots.partition_point(|&(kx, _)| kx <= x) - 1;
                let (x0, v0) = knots[i];
                let (x1, v1) = knots[i + 1];
                v0 + (x - x0) * (v1 - v0) / (x1 - x0)
            }
        }
    }

    /// Inverse on `[0, ∞)`: the unique `x >= 0` with `h(x) = v`.
    ///
    /// Linear and piecewise shapes invert exactly; the power shape brackets
    /// then bisects with a Newton polish (round-trips to `1e-12` relative).
    pub fn inverse(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match self {
            HoldingCost::Linear { a } => v / a,
            HoldingCost::Power { a, p } => {
                let guess = (v / a).powf(1.0 / p);
                let hi = (guess * (1.0 + 1e-9)).max(guess + 1e-300);
                let lo = guess * (1.0 - 1e-9);
                let (lo, hi) = if self.eval(lo) <= v && self.eval(hi) >= v {
                    (lo, hi)
                } else {
                    (0.0, 2.0 * guess + 1.0)
                };
                let a_ = *a;
                let p_ = *p;
                invert_increasing(
                    |x| self.eval(x),
                    Some(move |x: f64| if x > 0.0 { a_ * p_ * x.powf(p_ - 1.0) } else { 0.0 }),
                    lo,
                    hi,
                    v,
                )
            }
            HoldingCost::PiecewiseLinearConvex { knots } => {
                let n = knots.len();
                if v >= knots[n - 1].1 {
                    let (x0, v0) = knots[n - 2];
                    let (x1, v1) = knots[n - 1];
                    return x1 + (v - v1) * (x1 - x0) / (v1 - v0);
                }
                let i = knots.partition_point(|&(_, kv)| kv <= v) - 1;
                let (x0, v0) = knots[i];
                let (x1, v1) = knots[i + 1];
                x0 + (v - v0) * (x1 - x0) / (v1 - v0)
            }
        }
    }

    /// Derivative where defined (right-derivative at piecewise knots).
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            HoldingCost::Linear { a } => *a,
            HoldingCost::Power { a, p } => {
                if x == 0.0 && *p < 1.0 {
                    f64::INFINITY
                } else {
                    a * p * x.powf(p - 1.0)
                }
            }
            HoldingCost::PiecewiseLinearConvex { knots } => {
                let n = knots.len();
                let i = if x >= knots[n - 1].0 {
                    n - 2
                } else {
                    knots.partition_point(|&(kx, _)| kx <= x).max(1) - 1
                };
                let (x0, v0) = knots[i];
                let (x1, v1) = knots[i + 1];
                (v1 - v0) / (x1 - x0)
            }
        }
    }

    /// Lipschitz constant on `[0, d]`, needed by the response ODE. Errors for
    /// `Power` with `p < 1`, whose derivative blows up at the origin.
    pub fn lipschitz(&self, d: f64) -> Result<f64> {
        match self {
            HoldingCost::Linear { a } => Ok(*a),
            HoldingCost::Power { a, p } => {
                if *p < 1.0 {
                    Err(Error::InvalidParameter(format!(
                        "h(x) = a x^p with p = {p} < 1 is not Lipschitz on [0, {d}]"
                    )))
                } else {
                    Ok(a * p * d.powf(p - 1.0))
                }
            }
            HoldingCost::PiecewiseLinearConvex { .. } => Ok(self.derivative(d)),
        }
    }

    /// Whether the shape is convex on `[0, ∞)`.
    pub fn is_convex(&self) -> bool {
        match self {
            HoldingCost::Linear { .. } => true,
            HoldingCost::Power { p, .. } => *p >= 1.0,
            // construction enforces nondecreasing slopes
            HoldingCost::PiecewiseLinearConvex { .. } => true,
        }
    }

    /// Whether `h` is linear, which unlocks closed-form integrals.
    pub fn is_linear(&self) -> bool {
        matches!(self, HoldingCost::Linear { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_eval_and_inverse() {
        let h = HoldingCost::Linear { a: 2.0 };
        h.validate().unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(1.5), 3.0);
        assert_eq!(h.eval(-1.0), 0.0);
        assert_eq!(h.inverse(3.0), 1.5);
    }

    #[test]
    fn power_inverse_round_trips() {
        let h = HoldingCost::Power { a: 0.7, p: 1.8 };
        h.validate().unwrap();
        for v in [1e-6, 0.01, 0.5, 1.0, 3.0, 17.0] {
            let x = h.inverse(v);
            assert!(
                (h.eval(x) - v).abs() <= 1e-12 * v.max(1.0),
                "round trip failed at v = {v}"
            );
        }
    }

    #[test]
    fn piecewise_eval_inverse_and_extension() {
        let h = HoldingCost::PiecewiseLinearConvex {
            knots: vec![(0.0, 0.0), (1.0, 1.0), (1.5, 2.0)],
        };
        h.validate().unwrap();
        assert_eq!(h.eval(0.5), 0.5);
        assert_eq!(h.eval(1.25), 1.5);
        assert_eq!(h.eval(2.0), 3.0); // last slope 2 extends
        assert_eq!(h.inverse(1.5), 1.25);
        assert_eq!(h.inverse(3.0), 2.0);
        assert_eq!(h.derivative(1.2), 2.0);
        assert_eq!(h.lipschitz(1.5).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(HoldingCost::Linear { a: 0.0 }.validate().is_err());
        assert!(HoldingCost::Power { a: 1.0, p: -1.0 }.validate().is_err());
        // non-convex: slope drops from 2 to 1
        let bad = HoldingCost::PiecewiseLinearConvex {
            knots: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)],
        };
        assert!(bad.validate().is_err());
        let not_zero = HoldingCost::PiecewiseLinearConvex {
            knots: vec![(0.0, 0.5), (1.0, 2.0)],
        };
        assert!(not_zero.validate().is_err());
    }

    #[test]
    fn power_p_below_one_accepted_but_not_lipschitz() {
        let h = HoldingCost::Power { a: 1.0, p: 0.5 };
        h.validate().unwrap();
        assert!(h.lipschitz(1.0).is_err());
        assert!(!h.is_convex());
    }

    #[test]
    fn json_form() {
        let h = HoldingCost::Linear { a: 1.0 };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"type":"linear","a":1.0}"#);
        let back: HoldingCost = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}
