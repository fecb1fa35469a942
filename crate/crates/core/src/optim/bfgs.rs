use super::{finite_or, Differentiable, OptimizationTrace, OptimizerConfig};
use crate::Result;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and an
/// Armijo backtracking line search.
pub fn minimize_bfgs<F: Differentiable + ?Sized>(
    f: &mut F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationTrace> {
    config.validate()?;
    let n = x0.len();
    let tol = config.cost_tolerance;
    let mut x = x0.to_vec();
    let mut fx = finite_or(f.cost(&x)?, 0)?;
    let mut evaluations = 1;
    let initial_cost = fx;
    let mut g = f.gradient(&x)?;
    let mut h_inv = identity(n);
    let mut costs = Vec::new();
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        if max_abs(&g) < tol {
            converged = true;
            break;
        }
        let mut p = mat_vec(&h_inv, &g)
            .into_iter()
            .map(|v| -v)
            .collect::<Vec<_>>();
        let mut slope = dot(&g, &p);
        if slope >= 0.0 {
            h_inv = identity(n);
            p = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + step * pi).collect();
            let ft = finite_or(f.cost(&trial)?, iteration)?;
            evaluations += 1;
            if ft <= fx + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no sufficient decrease along a descent direction: stationary
            // to working precision
            converged = true;
            break;
        };

        let g_new = f.gradient(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            update_inverse_hessian(&mut h_inv, &s, &y, sy);
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        costs.push(fx);
        if decrease < tol {
            converged = true;
            break;
        }
    }

    Ok(OptimizationTrace {
        initial_cost,
        iterations: costs.len(),
        costs,
        params: x,
        converged,
        evaluations,
        calibration_evaluations: 0,
        final_cost: fx,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
