//! End-to-end run of a reduced workload game with a piecewise-linear convex
//! holding cost: the effective game of the two-class instance (drifts raised
//! so the value is finite) exercises the quadrature value route, the
//! boundary kink, the response ODE, the barrier strategy, and the smoothing
//! sequence on a non-trivial `h`.
//!
//! Effective parameters for classes with mu = (1, 2), rho = (1/2, 1/2), unit
//! variability, h = (1, 1), r = (2, 3), D = (1, 1), y = (-2, -2):
//! c1 = 2/3, c2 = 1/3 (c = 2/9), r = 2, D = 1.5, y = -3, and
//! h(w) = w on [0, 1], 1 + 2(w - 1) on [1, 1.5]. The boundary solves
//! r^2/(4c) + r y + h(beta) = 4.5 - 6 + h(beta) = 0, so h(beta0) = 1.5 and
//! beta0 = 1.25; the kink criterion 3 < min(3.25, 4.5) holds, so g has a
//! genuine kink there.

mod common;

use mdxgame::adversary::{optimal_response, termination_time};
use mdxgame::collapse::{effective_params, ClassParams, MulticlassParams};
use mdxgame::engine::{evaluate_hitting, evaluate_original};
use mdxgame::skorohod::barrier_strategy;
use mdxgame::value::{bellman_residual, free_boundary, smooth_value, value_g, value_g_quadrature};
use mdxgame::{GameParams, HoldingCost};

use common::random_psi;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn workload_game() -> GameParams {
    let multi = MulticlassParams::new(vec![
        ClassParams { lambda: 0.5, mu: 1.0, s2_ia: 1.0, s2_st: 1.0, h: 1.0, r: 2.0, d: 1.0, y: -2.0 },
        ClassParams { lambda: 1.0, mu: 2.0, s2_ia: 1.0, s2_st: 1.0, h: 1.0, r: 3.0, d: 1.0, y: -2.0 },
    ])
    .unwrap();
    effective_params(&multi).unwrap().game
}

/// Segment-exact antiderivative of the value integrand over one linear piece
/// of `h`: with `h' = m` on the piece, `∫ sqrt(y^2 - h(u)/c) du` has the
/// primitive `-(2c/(3m)) (y^2 - h(u)/c)^{3/2}`.
fn g_piecewise_oracle(params: &GameParams, knots: &[(f64, f64)], x: f64) -> f64 {
    let (c, y) = (params.c(), params.y());
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (u0, v0) = w[0];
        let (u1, v1) = w[1];
        if x <= u0 {
            break;
        }
        let hi = x.min(u1);
        let m = (v1 - v0) / (u1 - u0);
        let h_at = |u: f64| v0 + m * (u - u0);
        let rad = |u: f64| (y * y - h_at(u) / c).max(0.0);
        let sqrt_int = -(2.0 * c / (3.0 * m)) * (rad(hi).powf(1.5) - rad(u0).powf(1.5));
        total += 2.0 * c * (-y * (hi - u0) - sqrt_int);
    }
    total
}

#[test]
fn boundary_and_kink_on_piecewise_h() {
    let game = workload_game();
    assert_eq!(game.y(), -3.0);
    assert!((game.c() - 2.0 / 9.0).abs() < 1e-15);
    let fb = free_boundary(&game).unwrap();
    assert!((fb.beta0 - 1.25).abs() < 1e-12);
    assert!(!fb.differentiable_at_beta0);
    // g'_L = 2c(-y - sqrt(y^2 - h(beta0)/c)) = (4/9)(3 - 1.5) = 2/3
    assert!((fb.g_left - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(fb.g_right, 2.0);
}

#[test]
fn quadrature_value_matches_piecewise_antiderivative() {
    let game = workload_game();
    let knots = vec![(0.0, 0.0), (1.0, 1.0), (1.5, 2.0)];
    let fb = free_boundary(&game).unwrap();
    for x in [0.1, 0.5, 0.9, 1.0, 1.1, 1.25] {
        let expected = g_piecewise_oracle(&game, &knots, x);
        let got = value_g(&game, x).unwrap();
        let got_q = value_g_quadrature(&game, x).unwrap();
        assert!((got - expected).abs() < 1e-9, "x = {x}: {got} vs {expected}");
        assert!((got_q - expected).abs() < 1e-9);
    }
    // affine extension above the boundary
    let g_top = g_piecewise_oracle(&game, &knots, fb.beta0) + game.r() * (1.5 - fb.beta0);
    assert!((value_g(&game, 1.5).unwrap() - g_top).abs() < 1e-9);
}

#[test]
fn residuals_hold_on_piecewise_h() {
    let game = workload_game();
    let rep = bellman_residual(&game, 1001).unwrap();
    assert!(rep.max_inner_residual <= 1e-9, "{}", rep.max_inner_residual);
    assert!(rep.max_h_violation <= 1e-12);
    assert!(rep.max_outer_residual <= 1e-12);
    assert!(rep.max_outer_l_violation <= 1e-12);
    assert!(rep.kink.is_some());
}

#[test]
fn barrier_stays_below_value_on_piecewise_h() {
    let game = workload_game();
    let fb = free_boundary(&game).unwrap();
    let strat = barrier_strategy(fb.beta0, &game).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let x = rng.gen_range(0.0..=1.5);
        let bound = value_g(&game, x).unwrap();
        let psi = random_psi(&mut rng, 12, 4.0, 6.0);
        let t_end = rng.gen_range(0.0..=6.0);
        let cost = evaluate_original(&game, x, &strat, &psi, t_end).unwrap();
        assert!(cost.total <= bound + 1e-8, "x = {x}: {} above {bound}", cost.total);
    }
}

#[test]
fn adversary_realizes_value_on_piecewise_h() {
    let game = workload_game();
    let fb = free_boundary(&game).unwrap();
    let strat = barrier_strategy(fb.beta0, &game).unwrap();
    for x in [0.3, 0.8, 1.1] {
        let resp = optimal_response(&game, x, 0.0).unwrap();
        let ev = evaluate_hitting(&game, x, &strat, &resp.psi).unwrap();
        let g = value_g(&game, x).unwrap();
        assert!((ev.cost.total - g).abs() < 1e-4, "x = {x}: {} vs {g}", ev.cost.total);
        let tq = termination_time(&game, x, 0.0).unwrap();
        assert!((ev.tau - tq).abs() < 1e-6);
    }
}

#[test]
fn smoothing_repairs_the_piecewise_kink() {
    let game = workload_game();
    let fb = free_boundary(&game).unwrap();
    let mut sups = Vec::new();
    for delta in [0.2, 0.1, 0.05] {
        let sv = smooth_value(&game, delta).unwrap();
        assert_eq!(sv.deriv(fb.beta0).unwrap(), game.r());
        for i in 0..=800 {
            let x = fb.beta0 * i as f64 / 800.0;
            let p = sv.deriv(x).unwrap();
            let l = -p * p / (4.0 * game.c()) - game.y() * p;
            assert!(l - game.h().eval(x) >= -1e-10, "delta = {delta}, x = {x}");
        }
        sups.push(sv.sup_distance(801).unwrap());
    }
    assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
}

#[test]
fn power_holding_cost_full_route() {
    // h(x) = x^2 on [0, 2] with the R1 constants: beta0 solves 1 - 2 + b^2 = 0,
    // so beta0 = 1; g(x) = x - (x sqrt(1-x^2) + asin x)/2 below the boundary.
    let game = GameParams::new(-2.0, 0.5, 0.5, 1.0, 2.0, HoldingCost::Power { a: 1.0, p: 2.0 }).unwrap();
    let fb = free_boundary(&game).unwrap();
    assert!((fb.beta0 - 1.0).abs() < 1e-12);
    let closed = |x: f64| x - 0.5 * (x * (1.0 - x * x).max(0.0).sqrt() + x.asin());
    for x in [0.2, 0.5, 0.9, 1.0] {
        let got = value_g(&game, x).unwrap();
        assert!((got - closed(x)).abs() < 1e-9, "x = {x}: {got} vs {}", closed(x));
    }
    // adversary against the barrier realizes the value away from the
    // degenerate corner
    let strat = barrier_strategy(fb.beta0, &game).unwrap();
    for x in [0.25, 0.6] {
        let resp = optimal_response(&game, x, 0.0).unwrap();
        let ev = evaluate_hitting(&game, x, &strat, &resp.psi).unwrap();
        assert!((ev.cost.total - closed(x)).abs() < 1e-4, "x = {x}");
    }
}
