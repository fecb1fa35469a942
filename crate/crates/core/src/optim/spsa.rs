use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_or, Objective, OptimizationTrace, OptimizerConfig};
use crate::Result;

fn perturbation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn probe<F: Objective + ?Sized>(
    f: &mut F,
    x: &[f64],
    delta: &[f64],
    ck: f64,
    iteration: usize,
) -> Result<(f64, f64)> {
    let plus: Vec<f64> = x.iter().zip(delta).map(|(v, d)| v + ck * d).collect();
    let minus: Vec<f64> = x.iter().zip(delta).map(|(v, d)| v - ck * d).collect();
    let fp = finite_or(f.cost(&plus)?, iteration)?;
    let fm = finite_or(f.cost(&minus)?, iteration)?;
    Ok((fp, fm))
}

/// Chooses `a` so the first update moves each parameter by about
/// `target_step`, from the mean gradient magnitude over a few random probes.
/// Returns `(a, evaluations spent)`.
pub fn calibrate_spsa<F: Objective + ?Sized, R: Rng + ?Sized>(
    f: &mut F,
    x0: &[f64],
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let g = &config.spsa;
    let big_a = stability(config);
    let probes = g.calibration_probes.max(1);
    let mut magnitude = 0.0;
    for _ in 0..probes {
        let delta = perturbation(rng, x0.len());
        let (fp, fm) = probe(f, x0, &delta, g.c, 0)?;
        magnitude += ((fp - fm) / (2.0 * g.c)).abs();
    }
    magnitude /= probes as f64;
    // a flat landscape gives no scale; fall back to a unit gradient
    let magnitude = if magnitude > 1e-10 { magnitude } else { 1.0 };
    let a = g.target_step * (big_a + 1.0).powf(g.alpha) / magnitude;
    Ok((a, 2 * probes))
}

fn stability(config: &OptimizerConfig) -> f64 {
    config
        .spsa
        .big_a
        .unwrap_or(0.1 * config.max_iterations as f64)
}

/// Simultaneous-perturbation stochastic approximation. Every iteration
/// spends exactly two cost evaluations; their mean is the recorded cost.
pub fn minimize_spsa<F: Objective + ?Sized>(
    f: &mut F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationTrace> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let g = config.spsa;
    let big_a = stability(config);
    let (a, calibration_evaluations) = match g.a {
        Some(a) => (a, 0),
        None => calibrate_spsa(f, x0, config, &mut rng)?,
    };

    let mut x = x0.to_vec();
    let mut costs = Vec::with_capacity(config.max_iterations);
    for k in 0..config.max_iterations {
        let ak = a / (k as f64 + 1.0 + big_a).powf(g.alpha);
        let ck = g.c / (k as f64 + 1.0).powf(g.gamma);
        let delta = perturbation(&mut rng, x.len());
        let (fp, fm) = probe(f, &x, &delta, ck, k + 1)?;
        let slope = (fp - fm) / (2.0 * ck);
        for (xi, di) in x.iter_mut().zip(&delta) {
            // Δ_i = ±1, so 1/Δ_i = Δ_i
            *xi -= ak * slope * di;
        }
        costs.push(0.5 * (fp + fm));
    }
    Ok(OptimizationTrace {
        initial_cost: costs.first().copied().unwrap_or(f64::NAN),
        final_cost: costs.last().copied().unwrap_or(f64::NAN),
        iterations: costs.len(),
        evaluations: 2 * costs.len(),
        costs,
        params: x,
        converged: false,
        calibration_evaluations,
    })
}
