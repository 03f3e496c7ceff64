//! Levenberg-Marquardt identification of the fractional order.

use fracrom::experiments::{ForwardKind, IdentificationSetup};
use fracrom::inverse::{identify, sensitivity};
use fracrom::{add_noise, BenchmarkCase, CaseId, FractionalOrder, IdentificationResult, LmConfig, ObservationData};

fn assert_descent(res: &IdentificationResult) {
    assert_eq!(res.trace.len(), res.iterations + 1);
    for w in res.trace.windows(2) {
        assert!(
            w[1].objective <= w[0].objective,
            "objective rose from {:e} to {:e} at k={}",
            w[0].objective,
            w[1].objective,
            w[1].k
        );
    }
}

#[test]
fn sensitivity_is_stable_in_the_increment() {
    let setup = IdentificationSetup::for_case(BenchmarkCase::new(CaseId::Ex1)).unwrap();
    let data = setup.observations(0.0, 0).unwrap();
    let beta = FractionalOrder::new(0.5).unwrap();
    let coarse = sensitivity(beta, &data, setup.forward(ForwardKind::Rom), 1e-3, None).unwrap();
    let fine = sensitivity(beta, &data, setup.forward(ForwardKind::Rom), 1e-4, None).unwrap();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = coarse.jacobian.iter().zip(&fine.jacobian).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-2 * norm(&fine.jacobian));
}

#[test]
fn clean_recovery_on_ex1() {
    let setup = IdentificationSetup::for_case(BenchmarkCase::new(CaseId::Ex1)).unwrap();
    let data = setup.observations(0.0, 0).unwrap();
    let res = setup.run(ForwardKind::Rom, 0.5, &data).unwrap();
    assert!(res.converged);
    assert!((res.beta_inv - 0.75).abs() <= 1e-7, "{}", res.beta_inv);
    assert!(res.iterations <= 14, "{} iterations", res.iterations);
    assert!(res.trace.last().unwrap().objective < 1e-14);
    assert!(res.trace.iter().all(|t| t.backtracks <= 5));
    assert_descent(&res);
}

#[test]
fn clean_recovery_on_ex2_from_every_start() {
    let setup = IdentificationSetup::for_case(BenchmarkCase::new(CaseId::Ex2)).unwrap();
    let data = setup.observations(0.0, 0).unwrap();
    for beta0 in fracrom::experiments::table_orders() {
        let res = setup.run(ForwardKind::Rom, beta0, &data).unwrap();
        assert!(res.converged, "beta0 {beta0}");
        assert!((res.beta_inv - 0.75).abs() <= 1e-6, "beta0 {beta0}: {}", res.beta_inv);
        assert_descent(&res);
    }
    let res = setup.run(ForwardKind::Rom, 0.3, &data).unwrap();
    assert!((res.beta_inv - 0.75).abs() <= 1e-7);
    assert!(res.iterations <= 10);
}

#[test]
fn noisy_runs_descend_and_stay_close() {
    let setup = IdentificationSetup::for_case(BenchmarkCase::new(CaseId::Ex1)).unwrap();
    for (eps, bound) in [(0.01, 5e-3), (0.1, 5e-2), (1.0, 0.25)] {
        for seed in 0..3 {
            let data = setup.observations(eps, seed).unwrap();
            let res = setup.run(ForwardKind::Rom, 0.5, &data).unwrap();
            assert!(
                (res.beta_inv - 0.75).abs() <= bound,
                "eps {eps} seed {seed}: {}",
                res.beta_inv
            );
            assert_descent(&res);
        }
    }
}

#[test]
fn noise_has_the_requested_relative_spread() {
    let clean = vec![1.0; 3969];
    for eps in [0.01, 0.1, 1.0] {
        let data = add_noise(&clean, eps, 7).unwrap();
        let n = data.values.len() as f64;
        let z: Vec<f64> = data.values.iter().map(|g| (g - 1.0) * 100.0).collect();
        let mean = z.iter().sum::<f64>() / n;
        let std = (z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(std >= 0.9 * eps && std <= 1.1 * eps, "eps {eps}: std {std}");
    }
}

#[test]
fn noise_is_a_function_of_the_seed() {
    let clean: Vec<f64> = (0..50).map(|i| i as f64).collect();
    assert_eq!(add_noise(&clean, 1.0, 3).unwrap(), add_noise(&clean, 1.0, 3).unwrap());
    assert_ne!(
        add_noise(&clean, 1.0, 3).unwrap().values,
        add_noise(&clean, 1.0, 4).unwrap().values
    );
}

#[test]
fn quadratic_model_converges_in_one_step() {
    // u(beta) = beta - 0.3 gives F = (beta - 0.3)^2 / 2 and an exact Newton step
    let forward = |b: FractionalOrder| Ok(vec![b.get() - 0.3]);
    let data = ObservationData::clean(vec![0.0]);
    let config = LmConfig {
        beta0: 0.8,
        regularized: false,
        ..LmConfig::default()
    };
    let res = identify(&config, &data, &forward).unwrap();
    assert!(res.converged);
    assert!((res.beta_inv - 0.3).abs() <= 1e-12);
    assert_eq!(res.trace[1].backtracks, 0);
    assert!(res.iterations <= 2);
}

#[test]
fn fom_and_rom_agree_on_a_small_grid() {
    let case = BenchmarkCase {
        id: CaseId::Ex2,
        n: 31,
        steps: 32,
        final_time: 1.0,
    };
    let setup = IdentificationSetup::for_case(case).unwrap();
    let data = setup.observations(0.0, 0).unwrap();
    let fom = setup.run(ForwardKind::Fom, 0.4, &data).unwrap();
    let rom = setup.run(ForwardKind::Rom, 0.4, &data).unwrap();
    assert!(
        (fom.beta_inv - rom.beta_inv).abs() <= 1e-6,
        "{} vs {}",
        fom.beta_inv,
        rom.beta_inv
    );
    assert_descent(&fom);
    assert_descent(&rom);
}

#[test]
fn invalid_configuration_is_rejected() {
    let forward = |b: FractionalOrder| Ok(vec![b.get()]);
    let data = ObservationData::clean(vec![0.5]);
    for config in [
        LmConfig {
            beta0: 1.2,
            ..LmConfig::default()
        },
        LmConfig {
            rho: 1.0,
            ..LmConfig::default()
        },
        LmConfig {
            sigma: 0.6,
            ..LmConfig::default()
        },
        LmConfig {
            tol: 0.0,
            ..LmConfig::default()
        },
    ] {
        assert!(identify(&config, &data, &forward).is_err(), "{config:?}");
    }
}
