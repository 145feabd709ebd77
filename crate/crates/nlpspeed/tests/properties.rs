//! Property tests of the explicit formulas and the dynamic-programming oracle
//! over randomly drawn admissible parameters.

use nlpspeed::closed_form::{fallback, rho_nlp_segments, s_nlp_closed, thm_c_intermediates, Branch};
use nlpspeed::hj_speed::{build_rate, free_boundary, solve_rho_oracle, SpeedFunction};
use nlpspeed::model::{
    c_llw, check_theorem12, hat_s_nlp, lambda_llw, sigma3, DecayRate, HypothesisContext, ModelParams,
};
use proptest::prelude::*;

fn decay_rate() -> impl Strategy<Value = DecayRate> {
    prop_oneof![
        Just(DecayRate::Infinite),
        (0.3f64..4.0).prop_map(DecayRate::Finite),
    ]
}

/// Parameters passing the hypothesis check, with their context.
fn admissible() -> impl Strategy<Value = (ModelParams, HypothesisContext)> {
    (
        (1.02f64..1.6, 1.05f64..2.0, 0.0f64..0.6),
        (0.3f64..1.2, 0.3f64..1.5),
        (0.0f64..0.5, 0.0f64..0.6),
        (0.5f64..1.5, 0.5f64..1.5),
        decay_rate(),
    )
        .prop_filter_map(
            "hypothesis check fails",
            |((r1, a12, a21), (d3, r3), (a31, a32), (a13, a23), lambda)| {
                let p = ModelParams {
                    d1: 1.0,
                    d3,
                    r1,
                    r3,
                    a12,
                    a13,
                    a21,
                    a23,
                    a31,
                    a32,
                };
                check_theorem12(&p, lambda).context.map(|ctx| (p, ctx))
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hat_s_nlp_range(a21 in 0.0f64..0.999, c1 in 2.0f64..6.0) {
        let mut p = ModelParams::published(a21, 1.1, 1.1);
        p.a21 = a21;
        let v = hat_s_nlp(&p, c1).unwrap();
        prop_assert!(v >= 2.0 * (1.0 - a21).sqrt() - 1e-12);
        prop_assert!(v <= 2.0 + 1e-12);
    }

    #[test]
    fn sigma3_continuous_at_branch_point(d3 in 0.1f64..2.0, r3 in 0.1f64..2.0) {
        let mut p = ModelParams::published(0.1, 1.1, 1.1);
        p.d3 = d3;
        p.r3 = r3;
        let critical = (r3 / d3).sqrt();
        let below = sigma3(&p, DecayRate::Finite(critical * (1.0 - 1e-9)));
        let at = sigma3(&p, DecayRate::Finite(critical));
        prop_assert!((below - at).abs() < 1e-8);
        prop_assert!(sigma3(&p, DecayRate::Finite(critical * 0.5)) >= at);
    }

    #[test]
    fn c_llw_bracket_ordering(a21 in 0.0f64..0.99, a32 in 0.0f64..1.0, d3 in 0.1f64..2.0) {
        let mut p = ModelParams::published(a21, 1.1, 1.1);
        p.a32 = a32;
        p.d3 = d3;
        let b = c_llw(&p).unwrap();
        prop_assert!(b.lower <= b.upper);
        prop_assert_eq!(b.upper, p.alpha3());
        prop_assert_eq!(b.lower == b.upper, a32 * (1.0 - a21) == 0.0);
        if b.linear.is_some() {
            let lam = lambda_llw(&p).unwrap();
            let c = b.linear.unwrap();
            let residual = lam * c - p.d3 * lam * lam - p.r3 * (1.0 - a32 * (1.0 - a21));
            prop_assert!(residual.abs() < 1e-12);
            prop_assert!(lam <= c / (2.0 * p.d3) + 1e-12);
        }
    }

    #[test]
    fn formulas_are_deterministic((p, ctx) in admissible()) {
        let a = thm_c_intermediates(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
        let b = thm_c_intermediates(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
        prop_assert_eq!(a.s_nlp.to_bits(), b.s_nlp.to_bits());
        prop_assert_eq!(hat_s_nlp(&p, ctx.c1).unwrap().to_bits(), ctx.c2.to_bits());
    }

    #[test]
    fn closed_form_bounds((p, ctx) in admissible()) {
        let s = s_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
        prop_assert!(s >= fallback(&p) - 1e-12);
        prop_assert!(s <= sigma3(&p, ctx.lambda) + 1e-12);
        let t = thm_c_intermediates(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
        let critical = (p.r3 * (1.0 - p.a32) / p.d3).sqrt();
        match t.branch {
            Branch::Steep => prop_assert!(t.lambda_nlp1.unwrap() <= critical),
            Branch::Shallow => prop_assert!(t.lambda_nlp2.unwrap() <= critical),
            Branch::Fallback => prop_assert_eq!(s, fallback(&p)),
        }
    }

    #[test]
    fn profile_presence_matches_formula((p, ctx) in admissible()) {
        let s = s_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
        match rho_nlp_segments(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap() {
            Some((_, segments)) => {
                let f = SpeedFunction::from_segments(segments.clone(), 2.0 * ctx.c1, 64);
                let fb = free_boundary(&f, None).unwrap();
                prop_assert!(fb > fallback(&p));
                prop_assert!((fb - s).abs() <= 1e-10, "free boundary {} vs formula {}", fb, s);
                for w in segments.windows(2) {
                    let (l, r) = (w[0].piece.eval(w[0].hi), w[1].piece.eval(w[1].lo));
                    prop_assert!((l - r).abs() <= 1e-10, "jump {} at {}", l - r, w[0].hi);
                }
            }
            None => prop_assert_eq!(s, fallback(&p)),
        }
    }

    #[test]
    fn oracle_matches_closed_profile((p, ctx) in admissible()) {
        if let Some((_, segments)) = rho_nlp_segments(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap() {
            let rate = build_rate(&p, &ctx, 1.0).unwrap();
            let samples: Vec<f64> = (0..=60).map(|k| 1.2 * ctx.c1 * k as f64 / 60.0).collect();
            let oracle = solve_rho_oracle(&rate, p.d3, ctx.lambda, &samples);
            let f = SpeedFunction::from_segments(segments, 2.0 * ctx.c1, 64);
            for (s, v) in samples.iter().zip(&oracle) {
                prop_assert!((f.eval(*s) - v).abs() <= 1e-9, "s = {}: closed {} vs oracle {}", s, f.eval(*s), v);
            }
        }
    }

    #[test]
    fn oracle_is_monotone_and_non_negative((p, ctx) in admissible(), mu in 0.0f64..=1.0) {
        let rate = build_rate(&p, &ctx, mu).unwrap();
        let samples: Vec<f64> = (0..=80).map(|k| 1.2 * ctx.c1 * k as f64 / 80.0).collect();
        let oracle = solve_rho_oracle(&rate, p.d3, ctx.lambda, &samples);
        prop_assert_eq!(oracle[0], 0.0);
        for w in oracle.windows(2) {
            prop_assert!(w[0] >= 0.0);
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn oracle_mu_lipschitz((p, ctx) in admissible(), m1 in 0.0f64..=1.0, m2 in 0.0f64..=1.0) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let samples: Vec<f64> = (0..=40).map(|k| 1.2 * ctx.c1 * k as f64 / 40.0).collect();
        let a = solve_rho_oracle(&build_rate(&p, &ctx, lo).unwrap(), p.d3, ctx.lambda, &samples);
        let b = solve_rho_oracle(&build_rate(&p, &ctx, hi).unwrap(), p.d3, ctx.lambda, &samples);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y - x >= -1e-12);
            prop_assert!(y - x <= p.r3 * p.a31 * (hi - lo) + 1e-12);
        }
    }

    #[test]
    fn strict_enhancement((p, ctx) in admissible()) {
        let alpha = p.alpha3();
        let roots = p.a32.sqrt() + (1.0 - p.a32).sqrt();
        if p.a31 < p.a32 && alpha < ctx.c2 && ctx.c1 < alpha * roots && ctx.lambda == DecayRate::Infinite {
            let s = s_nlp_closed(&p, ctx.c1, ctx.c2, ctx.lambda).unwrap();
            prop_assert!(s > fallback(&p));
        }
    }
}
