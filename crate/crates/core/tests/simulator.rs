use std::f64::consts::PI;

use densify_core::antenna::{AntennaScaling, GminRule};
use densify_core::asymptotics::{self, LimitParams};
use densify_core::fading::{FadingModel, LinkFadingConfig};
use densify_core::geometry::WindowSpec;
use densify_core::pathloss::PathLossModel;
use densify_core::simulator::{self, PointRunner, SimError, SimulationConfig};

fn exp_config(scale_m: f64, trials: usize, seed: u64) -> SimulationConfig {
    let model = PathLossModel::stretched_exponential(scale_m, 1.0).unwrap();
    let mut cfg = SimulationConfig::new(model, AntennaScaling::ula(1.0, 1.0), seed);
    cfg.window = WindowSpec::Disk { radius_km: 2.0 };
    cfg.trials = trials;
    cfg
}

#[test]
fn repeated_runs_are_bit_identical() {
    let cfg = exp_config(200.0, 10_000, 42);
    let a = simulator::estimate_point(20.0, &cfg).unwrap();
    let b = simulator::estimate_point(20.0, &cfg).unwrap();
    assert_eq!(a, b);
    let other = simulator::estimate_point(20.0, &SimulationConfig { master_seed: 43, ..cfg }).unwrap();
    assert_ne!(a.mean_sinr, other.mean_sinr);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let cfg = exp_config(200.0, 500, 7);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulator::sweep(&[5.0, 50.0], &cfg).unwrap())
    };
    let (one, three) = (run(1), run(3));
    for (a, b) in one.iter().zip(&three) {
        assert_eq!(a.result, b.result);
    }
}

#[test]
fn sweep_points_match_single_estimates() {
    let cfg = exp_config(200.0, 300, 8);
    let lambdas = [1.0, 10.0, 100.0];
    let out = simulator::sweep(&lambdas, &cfg).unwrap();
    for (i, o) in out.iter().enumerate() {
        let e = o.result.as_ref().unwrap();
        assert_eq!(*e, simulator::estimate_point_at(lambdas[i], i, &cfg).unwrap());
        assert_eq!(e.ase, e.lambda * 1e-6 * e.mean_se);
    }
    assert_ne!(out[0].result.as_ref().unwrap().seed, out[1].result.as_ref().unwrap().seed);
    assert!(matches!(simulator::sweep(&[1.0, 1.0], &cfg), Err(SimError::NotIncreasing)));
}

#[test]
fn invariant_to_joint_rescaling() {
    let cfg = exp_config(200.0, 2, 9);
    let c = 37.5;
    let scaled = SimulationConfig {
        pathloss: cfg.pathloss.clone().with_l0(c * cfg.pathloss.l0()).unwrap(),
        noise_power: c * cfg.noise_power,
        ..cfg.clone()
    };
    let (a, b) = (PointRunner::new(30.0, 0, &cfg).unwrap(), PointRunner::new(30.0, 0, &scaled).unwrap());
    let mut buf = Vec::new();
    for t in 0..50 {
        let (x, y) = (a.trial(t, &mut buf).unwrap(), b.trial(t, &mut buf).unwrap());
        assert!((x.sinr - y.sinr).abs() <= 1e-12 * x.sinr, "trial {t}");
        assert!((c * x.signal - y.signal).abs() <= 1e-12 * y.signal);
    }
}

#[test]
fn noise_limited_regime() {
    // E[e^{-r0/ℓ}] for Rayleigh r0, by midpoint rule in the test itself
    let (lambda, ell) = (0.5, 200.0);
    let n = 200_000;
    let h = 4000.0 / n as f64;
    let mean_l: f64 = (0..n)
        .map(|k| {
            let r = (k as f64 + 0.5) * h;
            let rk = r / 1000.0;
            2.0 * PI * lambda * rk * (-PI * lambda * rk * rk).exp() / 1000.0 * (-r / ell).exp() * h
        })
        .sum();

    let mut cfg = exp_config(ell, 20_000, 10);
    cfg.window = WindowSpec::Disk { radius_km: 5.0 };
    let mut last = f64::INFINITY;
    for sigma2 in [1e2, 1e4, 1e6] {
        cfg.noise_power = sigma2;
        let e = simulator::estimate_point(lambda, &cfg).unwrap();
        assert!(e.mean_sinr < last);
        last = e.mean_sinr;
        if sigma2 >= 1e4 {
            // g_max = ⌈λ⌉ = 1, E[h̃] = 1
            let expected = mean_l / sigma2;
            assert!((e.mean_sinr - expected).abs() < 3.0 * e.sinr_ci + 1e-3 * expected, "{} vs {expected}", e.mean_sinr);
        }
    }
}

#[test]
fn jensen_direction() {
    for (lambda, seed) in [(1.0, 1), (30.0, 2), (300.0, 3)] {
        let e = simulator::estimate_point(lambda, &exp_config(200.0, 4000, seed)).unwrap();
        assert!(e.mean_se <= (1.0 + e.mean_sinr + e.sinr_ci).log2() + e.se_ci, "λ = {lambda}");
        assert!(e.median_sinr.is_finite() && e.median_sinr >= 0.0);
    }
}

#[test]
fn ci_shrinks_as_root_trials() {
    let small = simulator::estimate_point(10.0, &exp_config(200.0, 4000, 11)).unwrap();
    let large = simulator::estimate_point(10.0, &exp_config(200.0, 8000, 12)).unwrap();
    let ratio = large.se_ci / small.se_ci;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    let ratio = large.sinr_ci / small.sinr_ci;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn suppressed_sidelobes_match_the_limit_oracle() {
    let model = PathLossModel::stretched_exponential(1000.0, 1.0).unwrap();
    let scaling = AntennaScaling::ula(1.0, 1.0).with_gmin_rule(GminRule::Suppressed);
    let fading = LinkFadingConfig::uniform(FadingModel::Deterministic);
    let mut cfg = SimulationConfig::new(model.clone(), scaling, 13);
    cfg.fading = fading;
    cfg.noise_power = 0.0;
    cfg.window = WindowSpec::Auto;
    cfg.trials = 1000;
    let e = simulator::estimate_point(1e3, &cfg).unwrap();

    let params = LimitParams::from_scaling(model, &scaling, fading).unwrap();
    assert_eq!(params.noise_floor(), 0.0);
    let oracle = asymptotics::evaluate_mean_limit(&params, 1e-6).unwrap();
    assert!((e.mean_sinr - oracle).abs() < 3.0 * e.sinr_ci, "{} ± {} vs {oracle}", e.mean_sinr, e.sinr_ci);
}

#[test]
fn errors_are_reported() {
    let cfg = exp_config(200.0, 1, 0);
    assert!(matches!(simulator::estimate_point(1.0, &cfg), Err(SimError::TooFewTrials(1))));
    let mut cfg = exp_config(200.0, 10, 0);
    cfg.noise_power = -1.0;
    assert!(matches!(simulator::estimate_point(1.0, &cfg), Err(SimError::InvalidNoise(_))));
    let mut cfg = exp_config(200.0, 10, 0);
    cfg.pathloss = PathLossModel::multi_slope(vec![], vec![4.0]).unwrap();
    assert!(matches!(simulator::estimate_point(1.0, &cfg), Err(SimError::Infeasible(_))));
    let mut cfg = exp_config(200.0, 10, 0);
    cfg.capacity = 100.0;
    assert!(simulator::estimate_point(100.0, &cfg).is_err());
    let out = simulator::sweep(&[1.0, 100.0], &cfg).unwrap();
    assert!(out[0].result.is_ok() && out[1].result.is_err());
}
