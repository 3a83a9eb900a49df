//! Stored programs: rank-one Choi states of unitaries plus the classical data
//! used to remove teleportation byproducts.

use std::sync::OnceLock;

use crate::duality::choi::ChoiState;
use crate::error::{Error, Result};
use crate::memory::description::ProgramDescription;
use crate::qkernel::linalg::{eig_unitary, identity, max_abs_diff};
use crate::qkernel::state::UnitaryOp;
use crate::scalar::{CMatrix, Real};
use crate::uqt::basis::{BasisKind, BellBasis};

/// `U = s1 · s2` with both factors symmetric unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricFactors<R: Real> {
    pub s1: UnitaryOp<R>,
    pub s2: UnitaryOp<R>,
}

impl<R: Real> SymmetricFactors<R> {
    /// Whether the second factor is the identity (the target was symmetric).
    pub fn is_single(&self) -> bool {
        max_abs_diff(self.s2.matrix(), &identity(self.s2.dim())) == R::zero()
    }

    pub fn product(&self) -> CMatrix<R> {
        self.s1.matrix() * self.s2.matrix()
    }
}

/// From `U = V D V†`: `s1 = V D Vᵗ`, `s2 = V* V†`. Symmetric inputs return
/// `(U, I)` unchanged.
pub fn symmetric_decompose<R: Real>(u: &UnitaryOp<R>) -> Result<SymmetricFactors<R>> {
    let tol = R::default_tolerance();
    let d = u.dim();
    if u.is_symmetric(tol * R::of(0.01)) {
        return Ok(SymmetricFactors {
            s1: u.clone(),
            s2: UnitaryOp::identity(d),
        });
    }
    let eig = eig_unitary(u.matrix(), tol)?;
    let v = &eig.vectors;
    let dv = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.eigenvalues.clone()));
    let half = R::of(0.5);
    let sym = |m: CMatrix<R>| (&m + m.transpose()).scale(half);
    let s1 = sym(v * dv * v.transpose());
    let s2 = sym(v.conjugate() * v.adjoint());
    Ok(SymmetricFactors {
        s1: UnitaryOp::with_tolerance(s1, tol * R::of(10.0))?,
        s2: UnitaryOp::with_tolerance(s2, tol * R::of(10.0))?,
    })
}

/// `C = U σ U†` for a byproduct `σ`.
pub fn conjugated<R: Real>(u: &CMatrix<R>, sigma: &CMatrix<R>) -> CMatrix<R> {
    u * sigma * u.adjoint()
}

/// A program `|ω_U⟩`. Programs built from a known unitary or description
/// carry classical data (correction table, symmetric factors), computed
/// lazily; programs known only as quantum states do not.
#[derive(Debug, Clone)]
pub struct StoredProgram<R: Real> {
    choi: ChoiState<R>,
    unitary: UnitaryOp<R>,
    classical: bool,
    symmetric: bool,
    factors: OnceLock<SymmetricFactors<R>>,
    corrections: OnceLock<Vec<CMatrix<R>>>,
    description: Option<ProgramDescription>,
}

impl<R: Real> StoredProgram<R> {
    pub fn from_unitary(u: UnitaryOp<R>) -> Self {
        let symmetric = u.is_symmetric(R::default_tolerance());
        Self {
            choi: ChoiState::of_unitary(&u),
            unitary: u,
            classical: true,
            symmetric,
            factors: OnceLock::new(),
            corrections: OnceLock::new(),
            description: None,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_unitary(UnitaryOp::identity(d))
    }

    pub fn from_description(desc: ProgramDescription) -> Result<Self> {
        let mut p = Self::from_unitary(desc.unitary()?);
        p.description = Some(desc);
        Ok(p)
    }

    /// A program known only through its (rank-one) Choi state.
    pub fn from_choi(choi: ChoiState<R>) -> Result<Self> {
        let op = choi.operator().ok_or_else(|| {
            Error::Validation("stored programs need a rank-one Choi state".into())
        })?;
        let unitary = UnitaryOp::with_tolerance(op, R::default_tolerance() * R::of(100.0))?;
        let symmetric = unitary.is_symmetric(R::default_tolerance());
        Ok(Self {
            choi,
            unitary,
            classical: false,
            symmetric,
            factors: OnceLock::new(),
            corrections: OnceLock::new(),
            description: None,
        })
    }

    /// Marks the classical data as available (the caller knows `U`).
    pub fn with_classical_data(mut self) -> Self {
        self.classical = true;
        self
    }

    /// Attaches known symmetric factors; enough for symmetric-pair composition.
    pub fn with_factors(self, factors: SymmetricFactors<R>) -> Result<Self> {
        let err = max_abs_diff(&factors.product(), self.unitary.matrix());
        if err > R::default_tolerance() * R::of(10.0) {
            return Err(Error::Validation(format!(
                "factors do not reproduce the program (residual {:e})",
                err.as_f64()
            )));
        }
        let _ = self.factors.set(factors);
        Ok(self)
    }

    pub fn with_description(mut self, desc: Option<ProgramDescription>) -> Self {
        self.description = desc;
        self
    }

    pub fn d(&self) -> usize {
        self.unitary.dim()
    }

    pub fn choi(&self) -> &ChoiState<R> {
        &self.choi
    }

    /// Unvectorised program, `√d · unvec|ω_U⟩`.
    pub fn unitary(&self) -> &UnitaryOp<R> {
        &self.unitary
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_classical_data(&self) -> bool {
        self.classical
    }

    pub fn description(&self) -> Option<&ProgramDescription> {
        self.description.as_ref()
    }

    /// Basis in which the correction table is indexed.
    pub fn bell_basis(&self) -> BellBasis<R> {
        BellBasis::default_for(self.d())
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.bell_basis().kind()
    }

    /// `{U σ_k U†}` for `k = 1..d²`, in the default Bell basis.
    pub fn correction_table(&self) -> Result<&[CMatrix<R>]> {
        if let Some(t) = self.corrections.get() {
            return Ok(t);
        }
        if !self.classical {
            return Err(Error::Configuration(
                "program has no classical data for a correction table".into(),
            ));
        }
        let basis = self.bell_basis();
        let table = (1..basis.len())
            .map(|k| conjugated(self.unitary.matrix(), basis.sigma(k)))
            .collect();
        let _ = self.corrections.set(table);
        Ok(self.corrections.get().expect("just set"))
    }

    /// Correction for outcome `k`; the identity for `k = 0`.
    pub fn correction(&self, k: usize) -> Result<CMatrix<R>> {
        if k == 0 {
            return Ok(identity(self.d()));
        }
        self.correction_table()?
            .get(k - 1)
            .cloned()
            .ok_or_else(|| Error::Argument(format!("outcome {k} out of range")))
    }

    pub fn symmetric_factors(&self) -> Result<&SymmetricFactors<R>> {
        if let Some(f) = self.factors.get() {
            return Ok(f);
        }
        if !self.classical {
            return Err(Error::Configuration(
                "program has no symmetric factors".into(),
            ));
        }
        let f = symmetric_decompose(&self.unitary)?;
        let _ = self.factors.set(f);
        Ok(self.factors.get().expect("just set"))
    }

    /// Computes every piece of lazily held classical data now.
    pub fn prepare(&self) -> Result<()> {
        if self.classical {
            self.correction_table()?;
            self.symmetric_factors()?;
        }
        Ok(())
    }

    /// `|ω_{U⊗V}⟩`, obtained by regrouping the wires of `|ω_U⟩ ⊗ |ω_V⟩`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let (a, b) = (self.d(), other.d());
        let joint = crate::qkernel::linalg::kron_vec(
            self.choi.amplitudes().expect("rank one"),
            other.choi.amplitudes().expect("rank one"),
        );
        let regrouped =
            crate::qkernel::linalg::permute_wires(&joint, &[a, a, b, b], &[0, 2, 1, 3])?;
        let choi =
            ChoiState::from_amplitudes(regrouped, a * b, R::default_tolerance() * R::of(10.0))?;
        let mut p = Self::from_choi(choi)?;
        p.classical = self.classical && other.classical;
        Ok(p)
    }

    /// Choi fidelity with `|ω_U⟩` for a reference unitary.
    pub fn fidelity_with(&self, u: &CMatrix<R>) -> R {
        let reference = crate::duality::choi::vectorize_single(u);
        reference
            .dotc(self.choi.amplitudes().expect("rank one"))
            .norm_sqr()
    }
}
