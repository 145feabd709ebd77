//! Cross-checks of the grid solver against exact solutions, the closed-form
//! profiles, the dynamic-programming oracle and the explicit sub- and
//! super-solutions.

use approx::assert_abs_diff_eq;
use nlpspeed::closed_form::{rho_nlp_closed, s_nlp_closed, thm_c_intermediates, ProfileCase};
use nlpspeed::hj_speed::{
    build_rate, default_s_max, free_boundary, reference_solutions, solve_rho_grid,
    solve_rho_grid_dirichlet, solve_rho_oracle, underline_beta3, RateProfile, DEFAULT_GRID_N,
};
use nlpspeed::model::{c_llw, check_theorem12, kanon_speed_bound, DecayRate, HypothesisContext, ModelParams};

fn fig1a() -> (ModelParams, HypothesisContext) {
    let p = ModelParams::published(0.01, 1.1, 1.1);
    let ctx = check_theorem12(&p, DecayRate::Infinite).context.unwrap();
    (p, ctx)
}

#[test]
fn constant_rate_compact_support() {
    let (d, r) = (0.6, 1.1);
    let rate = RateProfile::constant(r);
    let lambda = DecayRate::Infinite;
    let s_max = default_s_max(&rate, d, lambda);
    let rho = solve_rho_grid(&rate, d, lambda, s_max, DEFAULT_GRID_N).unwrap();
    let err = rho.sup_distance_to(s_max, |s| (s * s / (4.0 * d) - r).max(0.0));
    assert!(err <= 1e-2, "sup error {err}");
    let fb = free_boundary(&rho, None).unwrap();
    assert_abs_diff_eq!(fb, 2.0 * (d * r).sqrt(), epsilon = 1e-2);
}

#[test]
fn constant_rate_slow_decay() {
    let (d, r, l) = (0.6, 1.1, 0.5);
    let rate = RateProfile::constant(r);
    let lambda = DecayRate::Finite(l);
    let s_max = default_s_max(&rate, d, lambda);
    let rho = solve_rho_grid(&rate, d, lambda, s_max, DEFAULT_GRID_N).unwrap();
    let err = rho.sup_distance_to(s_max, |s| (l * s - (d * l * l + r)).max(0.0));
    assert!(err <= 1e-2, "sup error {err}");
    let fb = free_boundary(&rho, None).unwrap();
    assert_abs_diff_eq!(fb, d * l + r / l, epsilon = 1e-2);
}

#[test]
fn fig1a_grid_matches_closed_form_and_oracle() {
    let (p, ctx) = fig1a();
    let rate = build_rate(&p, &ctx, 1.0).unwrap();
    let s_max = default_s_max(&rate, p.d3, ctx.lambda);
    let rho = solve_rho_grid(&rate, p.d3, ctx.lambda, s_max, DEFAULT_GRID_N).unwrap();
    let (case, closed) = rho_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda, s_max, DEFAULT_GRID_N)
        .unwrap()
        .unwrap();
    assert_eq!(case, ProfileCase::ThreePiece);
    let err = rho.sup_distance_to(ctx.c1, |s| closed.eval(s));
    assert!(err <= 1e-2, "grid vs closed form {err}");

    let samples: Vec<f64> = (0..=200).map(|k| ctx.c1 * k as f64 / 200.0).collect();
    let oracle = solve_rho_oracle(&rate, p.d3, ctx.lambda, &samples);
    for (s, v) in samples.iter().zip(&oracle) {
        assert_abs_diff_eq!(*v, closed.eval(*s), epsilon = 1e-12);
        assert!((rho.eval(*s) - v).abs() <= 1e-2);
    }

    let fb = free_boundary(&rho, None).unwrap();
    assert_abs_diff_eq!(fb, 1.290, epsilon = 2e-2);
    let exact = s_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
    assert_abs_diff_eq!(fb, exact, epsilon = 2e-2);
}

#[test]
fn fig1a_underline_free_boundary() {
    let (p, ctx) = fig1a();
    let s_nlp = s_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
    assert!(s_nlp >= c_llw(&p).unwrap().linear.unwrap());
    let beta = underline_beta3(&p, &ctx, s_nlp, DEFAULT_GRID_N).unwrap();
    assert_abs_diff_eq!(beta, s_nlp, epsilon = 2e-2);
}

#[test]
fn underline_without_a31_is_exact() {
    let (mut p, _) = fig1a();
    p.a31 = 0.0;
    let ctx = check_theorem12(&p, DecayRate::Infinite).context.unwrap();
    let rate = build_rate(&p, &ctx, 1.0).unwrap();
    let s_max = default_s_max(&rate, p.d3, ctx.lambda);
    let rho = solve_rho_grid(&rate, p.d3, ctx.lambda, s_max, DEFAULT_GRID_N).unwrap();
    let s_nlp = free_boundary(&rho, None).unwrap();
    let beta = underline_beta3(&p, &ctx, s_nlp.min(ctx.c2 * 0.99), DEFAULT_GRID_N).unwrap();
    assert_eq!(beta, s_nlp);
}

#[test]
fn kanon_bound_matches_dirichlet_problem() {
    let (p, ctx) = fig1a();
    let mu_hat = 0.1;
    let bound = kanon_speed_bound(&p, ctx.c2, mu_hat).unwrap();
    let reduced = p.r3 * (1.0 - p.a32 * (1.0 - p.a21));
    let rate = RateProfile::constant(reduced);
    let rho = solve_rho_grid_dirichlet(&rate, p.d3, ctx.c2, mu_hat, DEFAULT_GRID_N).unwrap();
    let fb = free_boundary(&rho, None).unwrap();
    assert_abs_diff_eq!(fb, bound, epsilon = 1e-2);
}

#[test]
fn sandwich_on_fig1a() {
    let (p, ctx) = fig1a();
    for lambda in [DecayRate::Infinite, DecayRate::Finite(1.0), DecayRate::Finite(3.0)] {
        let ctx = HypothesisContext::new(&p, ctx.c1, ctx.c2, lambda).unwrap();
        let rate = build_rate(&p, &ctx, 1.0).unwrap();
        let s_max = default_s_max(&rate, p.d3, lambda);
        let rho = solve_rho_grid(&rate, p.d3, lambda, s_max, DEFAULT_GRID_N).unwrap();
        let refs = reference_solutions(&rate, p.d3, lambda, s_max, DEFAULT_GRID_N);
        for i in 0..=rho.n() {
            let v = rho.values()[i];
            assert!(refs.sub.values()[i] <= v + 1e-2, "sub above solution at s = {}", rho.s(i));
            assert!(v <= refs.sup.values()[i] + 1e-2, "solution above super at s = {}", rho.s(i));
            if rho.s(i) >= refs.c_g {
                assert!((refs.sub.values()[i] - v).abs() <= 1e-2);
            }
        }
    }
}

#[test]
fn finite_decay_closed_form_matches_grid() {
    let (p, ctx) = fig1a();
    for l in [1.0, 1.5, 2.5] {
        let lambda = DecayRate::Finite(l);
        let ctx = HypothesisContext::new(&p, ctx.c1, ctx.c2, lambda).unwrap();
        let t = thm_c_intermediates(&p, ctx.c1, ctx.c2, lambda).unwrap();
        let rate = build_rate(&p, &ctx, 1.0).unwrap();
        let s_max = default_s_max(&rate, p.d3, lambda);
        let rho = solve_rho_grid(&rate, p.d3, lambda, s_max, DEFAULT_GRID_N).unwrap();
        let fb = free_boundary(&rho, None).unwrap();
        assert_abs_diff_eq!(fb, t.s_nlp, epsilon = 2e-2);
        let samples: Vec<f64> = (0..=100).map(|k| ctx.c1 * k as f64 / 100.0).collect();
        let oracle = solve_rho_oracle(&rate, p.d3, lambda, &samples);
        for (s, v) in samples.iter().zip(&oracle) {
            assert!((rho.eval(*s) - v).abs() <= 1e-2, "lambda {l}, s {s}: {} vs {v}", rho.eval(*s));
        }
    }
}
