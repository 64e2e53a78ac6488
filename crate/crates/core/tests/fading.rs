use densify_core::fading::{FadingModel, LinkFadingConfig};
use densify_core::rng::StreamKey;
use densify_core::stats;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Exp};

const MODELS: [FadingModel; 7] = [
    FadingModel::RayleighPower,
    FadingModel::NakagamiPower { m: 0.5 },
    FadingModel::NakagamiPower { m: 2.0 },
    FadingModel::NakagamiPower { m: 4.0 },
    FadingModel::RicianPower { k: 0.0 },
    FadingModel::RicianPower { k: 6.0 },
    FadingModel::Deterministic,
];

#[test]
fn moment_agrees_with_monte_carlo() {
    let n = 1_000_000;
    for (j, model) in MODELS.iter().enumerate() {
        let sampler = model.sampler().unwrap();
        let mut rng = StreamKey::new(77).child(j as u64).rng();
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for s in [0.1, 1.0, 10.0] {
            let values: Vec<f64> = draws.iter().map(|x| -(-s * x).exp_m1()).collect();
            let mc = stats::Summary::of(&values);
            let exact = model.one_minus_exp_moment(s).unwrap();
            let se = mc.std_error();
            assert!((mc.mean - exact).abs() < 3.0 * se + 1e-10, "{model:?} s={s}: {} vs {exact} (se {se})", mc.mean);
        }
    }
}

#[test]
fn nakagami_two_at_two() {
    let model = FadingModel::NakagamiPower { m: 2.0 };
    assert!((model.one_minus_exp_moment(2.0).unwrap() - 0.75).abs() < 1e-15);
    let sampler = model.sampler().unwrap();
    let mut rng = StreamKey::new(5).rng();
    let n = 10_000_000;
    let mut sum = 0.0;
    for _ in 0..n {
        sum += -(-2.0 * sampler.sample(&mut rng)).exp_m1();
    }
    // per-draw std of 1 - e^{-2X} is below 0.25
    assert!((sum / n as f64 - 0.75).abs() < 3.0 * 0.25 / (n as f64).sqrt());
}

#[test]
fn nakagami_one_is_rayleigh() {
    let n = 100_000;
    let exp = Exp::new(1.0).unwrap();
    let naka = FadingModel::NakagamiPower { m: 1.0 }.sampler().unwrap();
    let mut rng = StreamKey::new(3).rng();
    let draws: Vec<f64> = (0..n).map(|_| naka.sample(&mut rng)).collect();
    let d = stats::ks_statistic(&draws, |x| exp.cdf(x));
    assert!(stats::ks_p_value(d, n as f64) > 0.01, "D = {d}");

    let ray = FadingModel::RayleighPower.sampler().unwrap();
    let mut rng = StreamKey::new(4).rng();
    let other: Vec<f64> = (0..n).map(|_| ray.sample(&mut rng)).collect();
    let d2 = stats::ks_two_sample(&draws, &other);
    assert!(stats::ks_p_value(d2, n as f64 / 2.0) > 0.01, "D = {d2}");
}

#[test]
fn default_links_are_unit_mean() {
    let cfg = LinkFadingConfig::default();
    for m in [cfg.desired, cfg.mainlobe_interf, cfg.sidelobe_interf] {
        assert_eq!(m.mean(), 1.0);
        assert!(m.check().is_ok());
    }
}

fn any_model() -> impl Strategy<Value = FadingModel> {
    prop_oneof![
        Just(FadingModel::RayleighPower),
        Just(FadingModel::Deterministic),
        (0.5f64..20.0).prop_map(|m| FadingModel::NakagamiPower { m }),
        (0.0f64..30.0).prop_map(|k| FadingModel::RicianPower { k }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moment_is_a_cdf_like_curve(model in any_model(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (s1, s2) = if a <= b { (a, b) } else { (b, a) };
        let (m1, m2) = (model.one_minus_exp_moment(s1).unwrap(), model.one_minus_exp_moment(s2).unwrap());
        prop_assert!(m1 <= m2 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&m1));
        prop_assert!(m2 <= 1.0);
    }

    #[test]
    fn samples_are_nonnegative(model in any_model(), seed in any::<u64>()) {
        let s = model.sampler().unwrap();
        let mut rng = StreamKey::new(seed).rng();
        for _ in 0..200 {
            prop_assert!(s.sample(&mut rng) >= 0.0);
        }
    }
}

#[test]
fn moment_tends_to_one() {
    for m in MODELS {
        let v = m.one_minus_exp_moment(1e6).unwrap();
        assert!(v > 0.99, "{m:?}: {v}");
    }
}
