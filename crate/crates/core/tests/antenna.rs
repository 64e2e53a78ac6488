use std::f64::consts::PI;

use densify_core::antenna::{self, AntennaFamily, AntennaScaling, GmaxRule, GminRule};
use proptest::prelude::*;

#[test]
fn ula_ratio_approaches_the_limit_slope() {
    let ula = AntennaScaling::ula(1.0, 1.0);
    for n in [256u64, 1000, 10_000, 1 << 20] {
        let p = antenna::pattern_for(&ula, n).unwrap();
        let ratio = p.g_max / p.g_min / n as f64;
        assert!((ratio - PI / 0.218).abs() < 0.05, "N = {n}: {ratio}");
    }
    let p = antenna::pattern_for(&ula, 256).unwrap();
    assert!((p.g_max / p.g_min / 256.0 / (PI / 0.218) - 1.0).abs() < 0.05);
    assert!((ula.limit_slope().unwrap().0 - 14.41).abs() < 0.005);
}

#[test]
fn ula_beamwidth_times_n_is_exact() {
    let ula = AntennaScaling::ula(1.0, 1.0);
    for n in 1..=1000u64 {
        let p = antenna::pattern_for(&ula, n).unwrap();
        assert!((p.beamwidth * n as f64 - 1.782).abs() <= 4.0 * f64::EPSILON, "N = {n}");
        assert_eq!(p.g_max, n as f64);
    }
}

#[test]
fn ula_beam_is_narrower_than_its_nominal_width() {
    // Half-power point of the array factor lies inside ±B/2 of boresight:
    // an independent check that B(N) = 1.782/N is a main-lobe width.
    for n in [8usize, 32, 128] {
        let b = 1.782 / n as f64;
        // spatial angle θ = sin(φ)/2 for half-wavelength spacing
        let edge = (0.5 * b).sin() / 2.0;
        let g = antenna::ula_beam_gain(n, 0.0, edge);
        assert!(g < n as f64 && g > 0.3 * n as f64, "N = {n}: {g}");
    }
}

fn scalings() -> impl Strategy<Value = AntennaScaling> {
    prop_oneof![
        Just(AntennaScaling::ula(1.0, 1.0)),
        Just(AntennaScaling::ula(1.0, 1.0).with_gmin_rule(GminRule::PowerConserving)),
        (1.0f64..30.0, 0.5f64..3.0).prop_map(|(alpha, beta)| AntennaScaling {
            family: AntennaFamily::ParametricStep {
                alpha,
                beta,
                gmax: GmaxRule::default(),
            },
            gmin_rule: GminRule::Nominal,
            zeta: 1.0,
            epsilon: 1.0,
        }),
    ]
}

proptest! {
    #[test]
    fn parametric_ratio_is_exact(alpha in 0.5f64..50.0, beta in 0.1f64..6.0, n in 1u64..100_000) {
        let s = AntennaScaling {
            family: AntennaFamily::ParametricStep { alpha, beta, gmax: GmaxRule::default() },
            gmin_rule: GminRule::Nominal,
            zeta: 1.0,
            epsilon: 1.0,
        };
        let p = antenna::pattern_for(&s, n).unwrap();
        let ratio = p.g_max / p.g_min;
        prop_assert!((ratio - alpha * n as f64).abs() <= 1e-12 * ratio);
        prop_assert!((p.beamwidth - (beta / n as f64).min(2.0 * PI)).abs() <= 1e-15);
    }

    #[test]
    fn patterns_are_monotone_in_n(s in scalings(), a in 1u64..50_000, b in 1u64..50_000) {
        let (n1, n2) = if a <= b { (a, b) } else { (b, a) };
        let (p1, p2) = (antenna::pattern_for(&s, n1).unwrap(), antenna::pattern_for(&s, n2).unwrap());
        prop_assert!(p2.g_max >= p1.g_max);
        prop_assert!(p2.beamwidth <= p1.beamwidth);
        prop_assert!(p1.g_max >= p1.g_min && p1.g_min > 0.0);
        prop_assert!(p1.beamwidth <= 2.0 * PI);
        prop_assert_eq!(antenna::pattern_for(&s, n1).unwrap(), p1);
    }

    #[test]
    fn density_map_is_the_ceiling(zeta in 0.1f64..10.0, eps in 0.2f64..2.0, lambda in 0.01f64..1e4) {
        let s = AntennaScaling::ula(zeta, eps);
        let n = antenna::antennas_for_density(&s, lambda).unwrap();
        let x = zeta * lambda.powf(eps);
        prop_assert!(n >= 1);
        prop_assert!((n as f64) >= x * (1.0 - 1e-12));
        prop_assert!((n as f64) < x + 1.0 || n == 1);
    }

    #[test]
    fn array_response_is_unit_norm(n in 1usize..300, theta in -1.0f64..1.0) {
        let norm: f64 = antenna::ula_array_response(n, theta).iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!((antenna::ula_beam_gain(n, theta, theta) - n as f64).abs() < 1e-9 * n as f64);
    }
}
