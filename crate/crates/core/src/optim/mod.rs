//! Classical optimizers and gradient evaluation for parameterized circuits.

mod bfgs;
mod gradient;
mod spsa;

pub use bfgs::minimize_bfgs;
pub use gradient::{
    adjoint_expectation_gradient, adjoint_overlap_gradient, central_difference,
    parameter_shift_gradient, ExpectationObjective, GradientMethod,
};
pub use spsa::{calibrate_spsa, minimize_spsa};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMethod {
    Bfgs,
    Spsa,
}

/// SPSA gain schedule `a_k = a/(k+1+A)^α`, `c_k = c/(k+1)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaGains {
    /// `None` calibrates `a` so that the first step has magnitude
    /// `target_step`.
    pub a: Option<f64>,
    pub c: f64,
    /// Stability constant; `None` means `0.1 · max_iterations`.
    pub big_a: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub target_step: f64,
    pub calibration_probes: usize,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.1,
            big_a: None,
            alpha: 0.602,
            gamma: 0.101,
            target_step: 0.1,
            calibration_probes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub max_iterations: usize,
    /// BFGS stops once a step lowers the cost by less than this, or once
    /// the largest gradient component drops below it.
    pub cost_tolerance: f64,
    pub spsa: SpsaGains,
    /// `None` evaluates costs exactly.
    pub shots: Option<u64>,
    pub seed: u64,
    pub gradient: GradientMethod,
}

impl OptimizerConfig {
    pub fn bfgs(max_iterations: usize) -> Self {
        Self {
            method: OptimizerMethod::Bfgs,
            max_iterations,
            cost_tolerance: 1e-6,
            spsa: SpsaGains::default(),
            shots: None,
            seed: 0,
            gradient: GradientMethod::Adjoint,
        }
    }

    pub fn spsa(max_iterations: usize, shots: Option<u64>, seed: u64) -> Self {
        Self {
            method: OptimizerMethod::Spsa,
            shots,
            seed,
            ..Self::bfgs(max_iterations)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.cost_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.cost_tolerance > 0.0) {
            return bad("cost_tolerance must be positive");
        }
        if self.shots == Some(0) {
            return Err(Error::ZeroShots);
        }
        let g = &self.spsa;
        let positive = [g.c, g.alpha, g.gamma, g.target_step]
            .into_iter()
            .chain(g.a)
            .chain(g.big_a.filter(|&a| a != 0.0))
            .all(|v| v > 0.0 && v.is_finite());
        if !positive || g.big_a.is_some_and(|a| a < 0.0) {
            return bad("SPSA gains must be positive");
        }
        Ok(())
    }
}

/// What an optimizer run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub initial_cost: f64,
    /// Cost estimate after each iteration.
    pub costs: Vec<f64>,
    pub params: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Cost evaluations spent by the iterations (gradients excluded).
    pub evaluations: usize,
    /// Extra cost evaluations spent calibrating gains.
    pub calibration_evaluations: usize,
    pub final_cost: f64,
}

impl OptimizationTrace {
    /// Running minimum of the recorded costs, starting from the initial cost.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = self.initial_cost;
        self.costs
            .iter()
            .map(|&c| {
                best = best.min(c);
                best
            })
            .collect()
    }
}

/// A scalar cost over a parameter vector.
pub trait Objective {
    fn cost(&mut self, params: &[f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn cost(&mut self, params: &[f64]) -> Result<f64> {
        self(params)
    }
}

/// A cost with an exact gradient.
pub trait Differentiable: Objective {
    fn gradient(&mut self, params: &[f64]) -> Result<Vec<f64>>;
}

/// Pairs a cost closure with a gradient closure.
pub struct WithGradient<F, G>(pub F, pub G);

impl<F, G> Objective for WithGradient<F, G>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn cost(&mut self, params: &[f64]) -> Result<f64> {
        (self.0)(params)
    }
}

impl<F, G> Differentiable for WithGradient<F, G>
where
    F: FnMut(&[f64]) -> Result<f64>,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    fn gradient(&mut self, params: &[f64]) -> Result<Vec<f64>> {
        (self.1)(params)
    }
}

pub(crate) fn finite_or(cost: f64, iteration: usize) -> Result<f64> {
    if cost.is_finite() {
        Ok(cost)
    } else {
        Err(Error::NonFiniteCost { iteration })
    }
}

/// Independent stream seed for `(seed, stream)` via a SplitMix64 round.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
