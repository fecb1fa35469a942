use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{Differentiable, Objective};
use crate::hamiltonian::PauliSum;
use crate::qsim::{Angle, Circuit, Gate, Statevector};
use crate::{Complex64, Error, Result};

/// How exact gradients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    /// One forward and one backward sweep over the statevector.
    #[default]
    Adjoint,
    /// `2P` cost evaluations at `±π/2` shifts.
    ParameterShift,
}

/// `∂f/∂θ_k = [f(θ + π/2·e_k) − f(θ − π/2·e_k)] / 2`.
///
/// Valid when every slot drives exactly one Pauli rotation with unit scale,
/// which is checked against `circuit`.
pub fn parameter_shift_gradient<F: Objective + ?Sized>(
    circuit: &Circuit,
    f: &mut F,
    params: &[f64],
) -> Result<Vec<f64>> {
    circuit.check_params(params)?;
    for (slot, bindings) in circuit.slot_bindings().iter().enumerate() {
        let ok = matches!(bindings.as_slice(), [(pos, scale)]
            if scale.abs() == 1.0 && circuit.ops()[*pos].kind.is_rotation());
        if !ok {
            return Err(Error::ParameterShiftUnsupported(slot));
        }
    }
    let mut shifted = params.to_vec();
    (0..params.len())
        .map(|k| {
            shifted[k] = params[k] + FRAC_PI_2;
            let plus = f.cost(&shifted)?;
            shifted[k] = params[k] - FRAC_PI_2;
            let minus = f.cost(&shifted)?;
            shifted[k] = params[k];
            Ok(0.5 * (plus - minus))
        })
        .collect()
}

/// Central finite differences with step `h`.
pub fn central_difference<F: Objective + ?Sized>(
    f: &mut F,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut x = params.to_vec();
    (0..params.len())
        .map(|k| {
            x[k] = params[k] + h;
            let plus = f.cost(&x)?;
            x[k] = params[k] - h;
            let minus = f.cost(&x)?;
            x[k] = params[k];
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

fn check_initial(circuit: &Circuit, initial: &Statevector) -> Result<()> {
    if initial.n_qubits() != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            got: initial.n_qubits(),
        });
    }
    Ok(())
}

/// Backward sweep shared by the adjoint gradients. On entry `psi` is the
/// circuit output and `lambda` the back-propagated bra vector; the result is
/// `2 Re(w ⟨λ_k|∂ψ_k⟩)` accumulated per slot.
fn backward_sweep(
    circuit: &Circuit,
    gates: &[Gate],
    mut psi: Vec<Complex64>,
    mut lambda: Vec<Complex64>,
    w: Complex64,
) -> Vec<f64> {
    let mut grad = vec![0.0; circuit.n_params()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (op, gate) in circuit.ops().iter().zip(gates).rev() {
        if let Angle::Param { slot, scale } = op.angle {
            scratch.copy_from_slice(&psi);
            gate.apply_generator(&mut scratch);
            let inner: Complex64 = lambda.iter().zip(&scratch).map(|(l, d)| l.conj() * d).sum();
            grad[slot] += 2.0 * scale * (w * inner).re;
        }
        let inv = gate.inverse();
        inv.apply_raw(&mut psi);
        inv.apply_raw(&mut lambda);
    }
    grad
}

/// `E(θ) = ⟨ψ(θ)|O|ψ(θ)⟩` with `|ψ(θ)⟩ = U(θ)|initial⟩`, and its gradient.
pub fn adjoint_expectation_gradient(
    circuit: &Circuit,
    params: &[f64],
    initial: &Statevector,
    op: &PauliSum,
) -> Result<(f64, Vec<f64>)> {
    check_initial(circuit, initial)?;
    let gates = circuit.bind(params)?;
    let mut psi = initial.amplitudes().to_vec();
    for g in &gates {
        g.apply_raw(&mut psi);
    }
    let lambda = op.apply(&psi)?;
    let value: Complex64 = psi.iter().zip(&lambda).map(|(p, l)| p.conj() * l).sum();
    let grad = backward_sweep(circuit, &gates, psi, lambda, Complex64::new(1.0, 0.0));
    Ok((value.re, grad))
}

/// `F(θ) = |⟨target|U(θ)|initial⟩|²` and its gradient.
pub fn adjoint_overlap_gradient(
    circuit: &Circuit,
    params: &[f64],
    initial: &Statevector,
    target: &Statevector,
) -> Result<(f64, Vec<f64>)> {
    check_initial(circuit, initial)?;
    check_initial(circuit, target)?;
    let gates = circuit.bind(params)?;
    let mut psi = initial.amplitudes().to_vec();
    for g in &gates {
        g.apply_raw(&mut psi);
    }
    let lambda = target.amplitudes().to_vec();
    let z: Complex64 = lambda.iter().zip(&psi).map(|(l, p)| l.conj() * p).sum();
    let grad = backward_sweep(circuit, &gates, psi, lambda, z.conj());
    Ok((z.norm_sqr(), grad))
}

/// `θ ↦ ⟨initial|U(θ)† O U(θ)|initial⟩` on the statevector.
#[derive(Debug, Clone)]
pub struct ExpectationObjective {
    pub circuit: Circuit,
    pub initial: Statevector,
    pub op: PauliSum,
    pub method: GradientMethod,
}

impl ExpectationObjective {
    pub fn new(circuit: Circuit, initial: Statevector, op: PauliSum) -> Result<Self> {
        check_initial(&circuit, &initial)?;
        if op.n_qubits() != circuit.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_qubits(),
                got: op.n_qubits(),
            });
        }
        Ok(Self {
            circuit,
            initial,
            op,
            method: GradientMethod::Adjoint,
        })
    }

    pub fn with_method(mut self, method: GradientMethod) -> Self {
        self.method = method;
        self
    }

    pub fn state(&self, params: &[f64]) -> Result<Statevector> {
        let mut sv = self.initial.clone();
        self.circuit.apply_to(params, &mut sv)?;
        Ok(sv)
    }
}

impl Objective for ExpectationObjective {
    fn cost(&mut self, params: &[f64]) -> Result<f64> {
        let sv = self.state(params)?;
        let h = self.op.apply(sv.amplitudes())?;
        Ok(sv
            .amplitudes()
            .iter()
            .zip(&h)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }
}

impl Differentiable for ExpectationObjective {
    fn gradient(&mut self, params: &[f64]) -> Result<Vec<f64>> {
        match self.method {
            GradientMethod::Adjoint => {
                adjoint_expectation_gradient(&self.circuit, params, &self.initial, &self.op)
                    .map(|(_, g)| g)
            }
            GradientMethod::ParameterShift => {
                let circuit = self.circuit.clone();
                parameter_shift_gradient(&circuit, self, params)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{hardware_efficient, AnsatzSpec};
    use crate::hamiltonian::{build_h0, build_h1_tfim};
    use crate::qsim::GateKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ry_objective() -> ExpectationObjective {
        let mut c = Circuit::new(1);
        c.push_param(GateKind::Ry, &[0], 0).unwrap();
        ExpectationObjective::new(c, Statevector::zero(1).unwrap(), build_h0(1, -1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn single_rotation_derivative() {
        // ⟨Z⟩ after RY(θ)|0⟩ is cos θ
        let mut f = ry_objective();
        let c = f.circuit.clone();
        let g = parameter_shift_gradient(&c, &mut f, &[FRAC_PI_2]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14);
        let g0 = parameter_shift_gradient(&c, &mut f, &[0.0]).unwrap();
        assert!(g0[0].abs() < 1e-14);
        let adj = f.gradient(&[FRAC_PI_2]).unwrap();
        assert!((adj[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn shared_slots_rejected_by_parameter_shift() {
        let mut c = Circuit::new(1);
        c.push_param(GateKind::Ry, &[0], 0).unwrap();
        c.push_param(GateKind::Rz, &[0], 0).unwrap();
        let mut f = |_: &[f64]| Ok(0.0);
        assert!(matches!(
            parameter_shift_gradient(&c, &mut f, &[0.1]),
            Err(Error::ParameterShiftUnsupported(0))
        ));
    }

    #[test]
    fn adjoint_matches_parameter_shift_on_entangled_state() {
        let spec = AnsatzSpec::new(3, 2);
        let c = hardware_efficient(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params: Vec<f64> = (0..spec.n_params())
            .map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0))
            .collect();
        let op = build_h1_tfim(3, 0.6, 2.0).unwrap();
        let mut f = ExpectationObjective::new(c, Statevector::zero(3).unwrap(), op).unwrap();
        let adj = f.gradient(&params).unwrap();
        let mut ps = f.clone().with_method(GradientMethod::ParameterShift);
        let shift = ps.gradient(&params).unwrap();
        for (a, b) in adj.iter().zip(&shift) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn overlap_gradient_matches_finite_differences() {
        let spec = AnsatzSpec::new(2, 1);
        let c = hardware_efficient(spec).unwrap();
        let target = c.prepare(&[0.3; 12]).unwrap();
        let init = Statevector::zero(2).unwrap();
        let params = [
            0.1, -0.4, 0.7, 0.2, 0.0, 0.5, -0.3, 0.9, 0.1, 0.4, -0.2, 0.6,
        ];
        let (_, g) = adjoint_overlap_gradient(&c, &params, &init, &target).unwrap();
        let mut f = |p: &[f64]| c.prepare(p)?.fidelity(&target);
        let fd = central_difference(&mut f, &params, 1e-6).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
