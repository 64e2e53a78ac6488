use densify_core::pathloss::{self, Condition, GainTable, PathLossModel, UmaParams};
use proptest::prelude::*;

/// Composite Simpson on r = u/(1-u), an oracle independent of the library's
/// Gauss–Kronrod code.
fn simpson_half_line(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let r = u / (1.0 - u);
        f(r) / ((1.0 - u) * (1.0 - u))
    };
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for k in 1..n {
        s += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gamma_closed_forms_and_simpson_oracle() {
    let bounded = PathLossModel::bounded_single_slope(4.0, 1.0).unwrap();
    let g = pathloss::gamma(&bounded, 1e-8).unwrap();
    assert!((g - 1.0 / 6.0).abs() <= 1e-8 * g);
    let oracle = simpson_half_line(|r| r * (1.0 + r).powi(-4), 20_000);
    assert!((g - oracle).abs() < 1e-9);

    let exp = PathLossModel::stretched_exponential(1.0, 1.0).unwrap();
    let oracle = simpson_half_line(|r| r * (-r).exp(), 20_000);
    assert!((pathloss::gamma(&exp, 1e-8).unwrap() - oracle).abs() < 1e-9);
    assert!((pathloss::gamma(&exp, 1e-8).unwrap() - 1.0).abs() < 1e-8);

    let gauss = PathLossModel::stretched_exponential(1.0, 2.0).unwrap();
    assert!((pathloss::gamma(&gauss, 1e-8).unwrap() - 0.5).abs() <= 0.5e-8);
}

#[test]
fn validate_examples() {
    let r = pathloss::validate(&PathLossModel::bounded_single_slope(4.0, 1.0).unwrap(), 1e-8);
    assert!(r.is_feasible && r.violations.is_empty());
    assert!((r.gamma.unwrap() - 0.166667).abs() < 1e-6);

    let r = pathloss::validate(&PathLossModel::stretched_exponential(1.0, 1.0).unwrap(), 1e-8);
    assert!(r.is_feasible);
    assert!((r.gamma.unwrap() - 1.0).abs() < 1e-8);

    let rows = "r_m,gain\n0,inf\n1,1\n2,0.0625\n4,0.00390625\n8,0.000244140625\n";
    let power_law = PathLossModel::user_defined(GainTable::from_csv(rows.as_bytes()).unwrap());
    let r = pathloss::validate(&power_law, 1e-8);
    assert!(!r.is_feasible);
    assert!(r.has(Condition::UnboundedAtOrigin));
    assert_eq!(r.violations[0].condition.to_string(), "unbounded at origin");
}

#[test]
fn uncapped_power_law_diverges_with_the_model_named() {
    let m = PathLossModel::multi_slope(vec![], vec![4.0]).unwrap();
    let err = pathloss::gamma(&m, 1e-8).unwrap_err();
    assert!(err.to_string().contains("multi-slope"), "{err}");
    // the same law capped at 1 m converges: 1/2 + 1/2
    let capped = PathLossModel::multi_slope(vec![1.0], vec![0.0, 4.0]).unwrap();
    assert!((pathloss::gamma(&capped, 1e-10).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn uma_default_is_feasible() {
    let m = PathLossModel::uma(UmaParams::default()).unwrap();
    let r = pathloss::validate(&m, 1e-8);
    assert!(r.is_feasible, "{r:?}");
    let g = r.gamma.unwrap();
    assert!(g > 0.0 && g.is_finite());
    assert_eq!(m.evaluate(0.0).unwrap(), m.l0());
}

fn model_strategy() -> impl Strategy<Value = PathLossModel> {
    prop_oneof![
        (2.1f64..8.0, 0.1f64..500.0).prop_map(|(e, s)| PathLossModel::bounded_single_slope(e, s).unwrap()),
        (1.0f64..2000.0, 0.3f64..3.0).prop_map(|(s, k)| PathLossModel::stretched_exponential(s, k).unwrap()),
        (1.0f64..100.0, 1.0f64..50.0, 2.1f64..3.0, 3.0f64..5.0).prop_map(|(b1, gap, e1, e2)| {
            PathLossModel::multi_slope(vec![b1, b1 + gap], vec![0.0, e1, e2]).unwrap()
        }),
        (10.0f64..40.0, 1.0f64..2.5, 6.0f64..60.0).prop_map(|(hb, hu, fc)| {
            PathLossModel::uma(UmaParams {
                bs_height_m: hb,
                ue_height_m: hu,
                env_height_m: 0.5,
                carrier_ghz: fc,
                ..Default::default()
            })
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_in_models_are_nonincreasing(m in model_strategy(), a in 0.0f64..5e4, b in 0.0f64..5e4) {
        let (r1, r2) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.evaluate(r2).unwrap() <= m.evaluate(r1).unwrap());
        prop_assert!(m.evaluate(r1).unwrap() <= m.l0());
        prop_assert!(m.evaluate(r2).unwrap() > 0.0 || r2 > 1e3);
    }

    #[test]
    fn scaling_l0_scales_gain_and_gamma(m in model_strategy(), c in 0.01f64..100.0, r in 0.0f64..5e3) {
        let l0 = m.l0();
        let scaled = m.clone().with_l0(c * l0).unwrap();
        let (a, b) = (m.evaluate(r).unwrap(), scaled.evaluate(r).unwrap());
        prop_assert!((b - c * a).abs() <= 1e-12 * (c * a).abs());
        let (ga, gb) = (pathloss::gamma(&m, 1e-9).unwrap(), pathloss::gamma(&scaled, 1e-9).unwrap());
        prop_assert!((gb - c * ga).abs() <= 1e-7 * c * ga);
    }

    #[test]
    fn bounded_gamma_matches_closed_form(e in 2.2f64..8.0, d in 0.1f64..300.0) {
        let m = PathLossModel::bounded_single_slope(e, d).unwrap();
        let exact = d * d / ((e - 1.0) * (e - 2.0));
        let got = pathloss::gamma(&m, 1e-9).unwrap();
        prop_assert!((got - exact).abs() <= 1e-8 * exact, "{} vs {}", got, exact);
    }

    #[test]
    fn negative_distances_are_rejected(m in model_strategy(), r in -1e6f64..-1e-12) {
        prop_assert!(m.evaluate(r).is_err());
    }
}
