//! Shared fixtures for the integration suites: reference game instances,
//! random path generators, and the discrete reflection oracle.

#![allow(dead_code)]

use rand::Rng;

use mdxgame::collapse::{ClassParams, MulticlassParams};
use mdxgame::{ControlPair, GameParams, HoldingCost, MonotonePath, PiecewisePath};

/// R1: c1 = c2 = 1/2 (c = 1/4), r = 1, y = -2, D = 2, h(x) = x.
pub fn r1() -> GameParams {
    GameParams::new(-2.0, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap()
}

/// R2: R1 with y = -0.5 (infinite value).
pub fn r2() -> GameParams {
    GameParams::new(-0.5, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap()
}

/// R3: R1 with y = -1.5 (kinked value function, beta0 = 1/2).
pub fn r3() -> GameParams {
    GameParams::new(-1.5, 0.5, 0.5, 1.0, 2.0, HoldingCost::unit()).unwrap()
}

/// M1: two classes, mu = (1, 2), rho = (1/2, 1/2), unit variability,
/// h = (1, 1), r = (2, 3), D = (1, 1), y = (-1, -1).
pub fn m1() -> MulticlassParams {
    MulticlassParams::new(vec![
        ClassParams { lambda: 0.5, mu: 1.0, s2_ia: 1.0, s2_st: 1.0, h: 1.0, r: 2.0, d: 1.0, y: -1.0 },
        ClassParams { lambda: 1.0, mu: 2.0, s2_ia: 1.0, s2_st: 1.0, h: 1.0, r: 3.0, d: 1.0, y: -1.0 },
    ])
    .unwrap()
}

/// Random perturbation pair: up to `max_segs` segments per component,
/// slopes in `[-max_slope, max_slope]`, horizon at most `max_horizon`.
pub fn random_psi(rng: &mut impl Rng, max_segs: usize, max_slope: f64, max_horizon: f64) -> ControlPair {
    ControlPair::new(
        random_component(rng, max_segs, max_slope, max_horizon),
        random_component(rng, max_segs, max_slope, max_horizon),
    )
    .unwrap()
}

fn random_component(rng: &mut impl Rng, max_segs: usize, max_slope: f64, max_horizon: f64) -> PiecewisePath {
    let n = rng.gen_range(1..=max_segs);
    let total: f64 = rng.gen_range(0.1..=max_horizon);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let segs: Vec<(f64, f64)> = raw
        .iter()
        .map(|d| (rng.gen_range(-max_slope..=max_slope), d / sum * total))
        .collect();
    PiecewisePath::from_segments(0.0, &segs).unwrap()
}

/// Random free path for reflection tests: arbitrary start, slopes in
/// `[-max_slope, max_slope]`.
pub fn random_omega(rng: &mut impl Rng, start_lo: f64, start_hi: f64, max_segs: usize, max_slope: f64, horizon: f64) -> PiecewisePath {
    let n = rng.gen_range(1..=max_segs);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let segs: Vec<(f64, f64)> = raw
        .iter()
        .map(|d| (rng.gen_range(-max_slope..=max_slope), d / sum * horizon))
        .collect();
    PiecewisePath::from_segments(rng.gen_range(start_lo..=start_hi), &segs).unwrap()
}

/// Random nondecreasing rejection control with jump at zero.
pub fn random_rho(rng: &mut impl Rng, max_jump: f64, max_segs: usize, max_rate: f64, horizon: f64) -> MonotonePath {
    let jump0 = rng.gen_range(0.0..=max_jump);
    let n = rng.gen_range(0..=max_segs);
    if n == 0 {
        return MonotonePath::constant_jump(jump0);
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let ramps: Vec<(f64, f64)> = raw
        .iter()
        .map(|d| (rng.gen_range(0.0..=max_rate), d / sum * horizon))
        .collect();
    MonotonePath::from_ramps(jump0, &ramps).unwrap()
}

/// The classic grid recursion for the two-sided reflection:
/// `phi_k = clamp(phi_{k-1} + (omega_k - omega_{k-1}), a, b)` on `n` uniform
/// steps. Convergence oracle for the exact event-driven construction.
pub fn reflect_grid_oracle(omega: &PiecewisePath, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let horizon = omega.horizon();
    let mut out = Vec::with_capacity(n + 1);
    let mut prev_w = omega.eval(0.0);
    let mut phi = prev_w.clamp(a, b);
    out.push((0.0, phi));
    for k in 1..=n {
        let t = horizon * k as f64 / n as f64;
        let w = omega.eval(t);
        phi = (phi + (w - prev_w)).clamp(a, b);
        prev_w = w;
        out.push((t, phi));
    }
    out
}
