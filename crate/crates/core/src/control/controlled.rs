//! Controlled application of an unknown gate through controlled swaps.

use crate::error::{Error, Result};
use crate::qkernel::gates;
use crate::qkernel::linalg::{identity, kron};
use crate::qkernel::state::{DensityOperator, PureState, UnitaryOp};
use num_complex::Complex;

use crate::scalar::{cabs, CMatrix, Real};

/// `CSWAP · (I ⊗ I ⊗ U) · CSWAP` on control ⊗ target ⊗ ancilla, with the
/// ancilla prepared in a declared eigenstate of `U`.
///
/// On control ⊗ target this realizes `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ e^{-iθ} U`: the
/// declared eigenvalue `e^{iθ}` fixes the otherwise unobservable phase of `U`.
#[derive(Debug, Clone)]
pub struct ControlledUnknown<R: Real> {
    circuit: UnitaryOp<R>,
    ancilla: PureState<R>,
    phase: Complex<R>,
}

/// Builds the controlled-swap construction around a black-box `u`.
pub fn controlled_unknown<R: Real>(
    u: &UnitaryOp<R>,
    eigenstate: &PureState<R>,
    eigenvalue: Complex<R>,
) -> Result<ControlledUnknown<R>> {
    controlled_unknown_tol(
        u,
        eigenstate,
        eigenvalue,
        R::default_tolerance() * R::of(10.0),
    )
}

pub fn controlled_unknown_tol<R: Real>(
    u: &UnitaryOp<R>,
    eigenstate: &PureState<R>,
    eigenvalue: Complex<R>,
    tol: R,
) -> Result<ControlledUnknown<R>> {
    let d = u.dim();
    if eigenstate.dim() != d {
        return Err(Error::Dimension(format!(
            "eigenstate has dimension {}, gate has {d}",
            eigenstate.dim()
        )));
    }
    if (cabs(eigenvalue) - R::one()).abs() > tol {
        return Err(Error::Precondition(
            "declared eigenvalue is not a phase".into(),
        ));
    }
    let phi = eigenstate.amplitudes();
    let residual = (u.matrix() * phi - phi * eigenvalue).norm();
    if residual > tol {
        return Err(Error::Precondition(format!(
            "declared eigenstate is off by {:e}",
            residual.as_f64()
        )));
    }
    let sw = gates::cswap::<R>(d);
    let mid = kron(&identity(2 * d), u.matrix());
    let circuit = UnitaryOp::from_matrix_unchecked(&sw * mid * &sw);
    Ok(ControlledUnknown {
        circuit,
        ancilla: PureState::from_parts_unchecked(phi.clone(), vec![d]),
        phase: eigenvalue,
    })
}

impl<R: Real> ControlledUnknown<R> {
    /// The full three-register circuit.
    pub fn unitary(&self) -> &UnitaryOp<R> {
        &self.circuit
    }

    pub fn ancilla(&self) -> &PureState<R> {
        &self.ancilla
    }

    pub fn phase(&self) -> Complex<R> {
        self.phase
    }

    /// Runs the circuit on a control ⊗ target state and discards the ancilla.
    pub fn apply(&self, rho: &DensityOperator<R>) -> Result<DensityOperator<R>> {
        self.apply_with_ancilla(rho, &self.ancilla.density())
    }

    /// As [`apply`](Self::apply) with an arbitrary ancilla state.
    pub fn apply_with_ancilla(
        &self,
        rho: &DensityOperator<R>,
        ancilla: &DensityOperator<R>,
    ) -> Result<DensityOperator<R>> {
        let d = self.ancilla.dim();
        if rho.dim() != 2 * d || ancilla.dim() != d {
            return Err(Error::Dimension(format!(
                "expected control ⊗ target of dimension {} and ancilla of {d}",
                2 * d
            )));
        }
        let joint = kron(rho.matrix(), ancilla.matrix());
        let u = self.circuit.matrix();
        let out = DensityOperator::from_parts_unchecked(u * joint * u.adjoint(), vec![2, d, d]);
        out.partial_trace(&[0, 1])
    }
}

/// The controlled gate the construction realizes: `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ e^{-iθ} U`.
pub fn ideal_controlled<R: Real>(u: &UnitaryOp<R>, eigenvalue: Complex<R>) -> CMatrix<R> {
    gates::controlled(&u.matrix().map(|z| z * eigenvalue.conj()))
}
