//! Scalar numerics: adaptive quadrature, an embedded Runge–Kutta stepper
//! with hit-time localization, and monotone root finding.
//!
//! These are deliberately small, special-purpose routines. Everything in the
//! crate is one-dimensional, the integrands are cheap, and the quadrature and
//! the ODE route are used to cross-check each other, so both live here under
//! full control of their tolerances.

/// Adaptive Simpson quadrature with an absolute error target.
///
/// Classic bisection scheme with the 1/15 Richardson error estimate. The
/// depth cap is generous because some integrands have a square-root
/// derivative singularity at an endpoint; near such a point each level
/// contributes O(1) work, so 80 levels stay cheap.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 80)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// One Cash–Karp 4(5) step. Returns the 5th-order solution and the embedded
/// error estimate.
fn cash_karp_step<F: Fn(f64, f64) -> f64>(f: &F, t: f64, y: f64, h: f64) -> (f64, f64) {
    const A2: f64 = 1.0 / 5.0;
    const A3: f64 = 3.0 / 10.0;
    const A4: f64 = 3.0 / 5.0;
    const A5: f64 = 1.0;
    const A6: f64 = 7.0 / 8.0;

    let k1 = f(t, y);
    let k2 = f(t + A2 * h, y + h * (1.0 / 5.0) * k1);
    let k3 = f(t + A3 * h, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = f(t + A4 * h, y + h * (3.0 / 10.0 * k1 - 9.0 / 10.0 * k2 + 6.0 / 5.0 * k3));
    let k5 = f(
        t + A5 * h,
        y + h * (-11.0 / 54.0 * k1 + 5.0 / 2.0 * k2 - 70.0 / 27.0 * k3 + 35.0 / 27.0 * k4),
    );
    let k6 = f(
        t + A6 * h,
        y + h
            * (1631.0 / 55296.0 * k1
                + 175.0 / 512.0 * k2
                + 575.0 / 13824.0 * k3
                + 44275.0 / 110592.0 * k4
                + 253.0 / 4096.0 * k5),
    );

    let y5 = y
        + h * (37.0 / 378.0 * k1 + 250.0 / 621.0 * k3 + 125.0 / 594.0 * k4
            + 512.0 / 1771.0 * k6);
    let y4 = y
        + h * (2825.0 / 27648.0 * k1
            + 18575.0 / 48384.0 * k3
            + 13525.0 / 55296.0 * k4
            + 277.0 / 14336.0 * k5
            + 1.0 / 4.0 * k6);
    (y5, y5 - y4)
}

/// Adaptive Runge–Kutta integration of `y' = f(t, y)` from `(t0, y0)` until
/// `y` first reaches zero (from above). Steps are error-controlled and capped
/// at `max_step`; the final hit time is localized by a secant iteration on
/// the last step so the returned path ends at `y = 0` to near machine
/// precision.
///
/// Returns the accepted `(t, y)` points including the start and the hit
/// point. Requires `y0 > 0` and a right-hand side that is negative along the
/// trajectory (the caller guarantees this).
pub fn rk_integrate_to_zero<F: Fn(f64, f64) -> f64>(
    f: &F,
    t0: f64,
    y0: f64,
    rel_tol: f64,
    max_step: f64,
    max_points: usize,
) -> Vec<(f64, f64)> {
    let abs_tol = 1e-13;
    let mut points = Vec::with_capacity(1024);
    points.push((t0, y0));
    let mut t = t0;
    let mut y = y0;
    let mut h = max_step.min(0.25 * y0 / f(t0, y0).abs().max(1e-30));

    while points.len() < max_points {
        h = h.min(max_step);
        let (y_new, err) = cash_karp_step(f, t, y, h);
        let scale = abs_tol + rel_tol * y.abs().max(y_new.abs());
        let ratio = (err.abs() / scale).max(1e-16);
        if ratio > 1.0 {
            // reject, shrink
            h *= (0.9 * ratio.powf(-0.2)).max(0.2);
            continue;
        }
        if y_new <= 0.0 {
            // localize the crossing inside [t, t + h] by secant on step size
            let mut lo = 0.0_f64; // y(lo) = y > 0
            let mut hi = h; // y(hi) = y_new <= 0
            let mut y_lo = y;
            let mut y_hi = y_new;
            let mut dt = h;
            for _ in 0..200 {
                // secant guess clipped into the bracket
                let denom = y_hi - y_lo;
                let mut guess = if denom.abs() > 0.0 {
                    lo - y_lo * (hi - lo) / denom
                } else {
                    0.5 * (lo + hi)
                };
                if !(guess > lo && guess < hi) {
                    guess = 0.5 * (lo + hi);
                }
                let (y_g, _) = cash_karp_step(f, t, y, guess);
                if y_g.abs() <= 1e-14 * y0.max(1.0) || hi - lo < 1e-16 * (1.0 + t) {
                    dt = guess;
                    break;
                }
                if y_g > 0.0 {
                    lo = guess;
                    y_lo = y_g;
                } else {
                    hi = guess;
                    y_hi = y_g;
                }
                dt = guess;
            }
            points.push((t + dt, 0.0));
            return points;
        }
        t += h;
        y = y_new;
        points.push((t, y));
        h *= (0.9 * ratio.powf(-0.2)).min(5.0);
    }
    points
}

/// Root of a continuous increasing function on `[lo, hi]` by bisection with a
/// Newton polish when a derivative is supplied. `f(lo) <= target <= f(hi)` is
/// assumed.
pub fn invert_increasing<F, G>(f: F, deriv: Option<G>, lo: f64, hi: f64, target: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut a = lo;
    let mut b = hi;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if f(m) < target {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    let mut x = 0.5 * (a + b);
    if let Some(d) = deriv {
        for _ in 0..4 {
            let dfx = d(x);
            if dfx.abs() < 1e-300 {
                break;
            }
            let step = (f(x) - target) / dfx;
            let next = (x - step).clamp(lo, hi);
            if (next - x).abs() <= f64::EPSILON * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_exact() {
        let v = adaptive_simpson(&|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_sqrt_endpoint_singularity() {
        // int_0^1 sqrt(1-x) dx = 2/3; derivative blows up at 1
        let v = adaptive_simpson(&|x| (1.0 - x).max(0.0).sqrt(), 0.0, 1.0, 1e-11);
        assert!((v - 2.0 / 3.0).abs() < 1e-10, "err {}", (v - 2.0 / 3.0).abs());
    }

    #[test]
    fn rk_hits_zero_of_linear_decay() {
        // y' = -2 from y0 = 1: hit at t = 0.5
        let pts = rk_integrate_to_zero(&|_, _| -2.0, 0.0, 1.0, 1e-10, 0.05, 100_000);
        let (t_hit, y_hit) = *pts.last().unwrap();
        assert!((t_hit - 0.5).abs() < 1e-12);
        assert_eq!(y_hit, 0.0);
    }

    #[test]
    fn rk_hits_zero_of_sqrt_field() {
        // y' = -2 sqrt(1 - y) from y0 = 3/4: y(t) = 1 - (1/2 + t)^2, hit at t = 1/2
        let f = |_: f64, y: f64| -2.0 * (1.0 - y).max(0.0).sqrt();
        let pts = rk_integrate_to_zero(&f, 0.0, 0.75, 1e-10, 0.01, 100_000);
        let (t_hit, _) = *pts.last().unwrap();
        assert!((t_hit - 0.5).abs() < 1e-10, "t_hit {t_hit}");
    }

    #[test]
    fn invert_increasing_with_newton() {
        let x = invert_increasing(|x| x * x * x, Some(|x: f64| 3.0 * x * x), 0.0, 2.0, 0.216);
        assert!((x - 0.6).abs() < 1e-14);
    }
}
