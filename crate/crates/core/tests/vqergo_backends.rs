use ergoforge::ansatz::AnsatzSpec;
use ergoforge::hamiltonian::{build_h0, build_h1_tfim};
use ergoforge::optim::OptimizerConfig;
use ergoforge::oracle::{ergotropy_exact, reduced_state, ExactDynamics};
use ergoforge::qsim::{NoiseModel, Statevector};
use ergoforge::vqergo::{
    compress_environment, mean_energy, optimize_passive, vqergo_pipeline, Backend, ChargedState,
    ChargingSource, PipelineConfig,
};
use ergoforge::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const H: f64 = 0.6;

fn tfim_state(n: usize, t: f64) -> Statevector {
    ExactDynamics::new(&build_h1_tfim(n, H, 2.0).unwrap())
        .unwrap()
        .state_at(t)
        .unwrap()
}

fn random_state(n: usize, seed: u64) -> Statevector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    Statevector::normalized(amps).unwrap()
}

#[test]
fn statevector_backend_recovers_exact_ergotropy() {
    let full = tfim_state(4, 0.4);
    let state = ChargedState::from_state(full.clone(), 0.4);
    for m in 1..=3 {
        let h0m = build_h0(m, H).unwrap();
        let exact = ergotropy_exact(0.4, &full, m, &h0m).unwrap().ergotropy;
        let best = (0..3)
            .map(|seed| {
                let cfg = OptimizerConfig::bfgs(1000)
                    .with_tolerance(1e-12)
                    .with_seed(seed);
                let r = optimize_passive(
                    &state,
                    m,
                    &h0m,
                    AnsatzSpec::new(m, 2),
                    &cfg,
                    &Backend::Statevector,
                )
                .unwrap();
                (r.ergotropy - exact).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "M={m}: {best}");
    }
}

#[test]
fn shot_estimates_are_unbiased() {
    let full = tfim_state(4, 0.6);
    let state = ChargedState::from_state(full, 0.6);
    let h0m = build_h0(2, H).unwrap();
    let exact = mean_energy(&state, 2, &h0m, &Backend::Statevector, 0).unwrap();
    let shots = 1024;
    let reps = 200;
    let samples: Vec<f64> = (0..reps)
        .map(|s| mean_energy(&state, 2, &h0m, &Backend::Shots { shots }, s).unwrap())
        .collect();
    let mean = samples.iter().sum::<f64>() / reps as f64;
    // Var(Σ h Z) ≤ (h M)² per shot
    let sigma = H * 2.0 / ((shots * reps) as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * sigma, "{mean} vs {exact}");
}

#[test]
fn noiseless_density_backend_agrees_with_shots() {
    let state = ChargedState::rxx(4, 2.0, 0.3).unwrap();
    let h0m = build_h0(2, H).unwrap();
    let exact = mean_energy(&state, 2, &h0m, &Backend::Statevector, 0).unwrap();
    let noisy = Backend::Noisy {
        shots: 100_000,
        noise: NoiseModel::noiseless(),
        mitigate: false,
    };
    let est = mean_energy(&state, 2, &h0m, &noisy, 5).unwrap();
    assert!((est - exact).abs() < 4.0 * H * 2.0 / 100_000f64.sqrt());
}

#[test]
fn gate_noise_lowers_the_ergotropy_estimate() {
    let state = ChargedState::rxx(2, 2.0, 0.6).unwrap();
    let h0m = build_h0(1, H).unwrap();
    let exact = ergotropy_exact(0.6, &state.statevector().unwrap(), 1, &h0m)
        .unwrap()
        .ergotropy;
    let noisy = Backend::Noisy {
        shots: 8192,
        noise: NoiseModel::new(0.01, 0.05, 0.0, 0.0).unwrap(),
        mitigate: false,
    };
    let runs: Vec<f64> = (0..10)
        .map(|seed| {
            let cfg = OptimizerConfig::spsa(200, Some(8192), seed);
            optimize_passive(&state, 1, &h0m, AnsatzSpec::new(1, 0), &cfg, &noisy)
                .unwrap()
                .ergotropy
        })
        .collect();
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    assert!(mean < exact, "{mean} vs {exact}");
}

#[test]
fn pipeline_is_deterministic() {
    let cfg = PipelineConfig {
        n_qubits: 3,
        h: H,
        depth: 1,
        optimizer: OptimizerConfig::spsa(30, Some(256), 0),
        backend: Backend::Shots { shots: 256 },
        sites: Some(vec![1, 0, 2]),
    };
    let run = || {
        vqergo_pipeline(
            ChargingSource::RxxExact { j: 2.0 },
            &cfg,
            &[0.2, 0.5],
            &[1, 2],
            &[4, 9],
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn custom_sites_follow_the_permuted_state() {
    let cfg = PipelineConfig {
        n_qubits: 4,
        h: H,
        depth: 1,
        optimizer: OptimizerConfig::bfgs(500).with_tolerance(1e-12),
        backend: Backend::Statevector,
        sites: Some(vec![1, 2, 0, 3]),
    };
    let rec = vqergo_pipeline(
        ChargingSource::RxxExact { j: 2.0 },
        &cfg,
        &[0.5],
        &[1],
        &[0],
    )
    .unwrap()
    .remove(0);
    let permuted = ChargedState::rxx(4, 2.0, 0.5)
        .unwrap()
        .statevector()
        .unwrap()
        .permuted(&[1, 2, 0, 3])
        .unwrap();
    let exact = ergotropy_exact(0.5, &permuted, 1, &build_h0(1, H).unwrap()).unwrap();
    assert!((rec.work - exact.work).abs() < 1e-10);
    assert!((rec.ergotropy - exact.ergotropy).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn compression_keeps_the_reduced_state(n in 2usize..=7, seed in any::<u64>()) {
        let full = random_state(n, seed);
        for m in 1..n {
            let small = compress_environment(&full, m).unwrap();
            prop_assert!(small.n_qubits() <= n.min(2 * m));
            let a = reduced_state(&full, m).unwrap();
            let b = reduced_state(&small, m).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }
}
