//! Logical ebits and composition of encoded programs.

use crate::duality::choi::ebit;
use crate::error::{Error, Result};
use crate::qkernel::linalg::{
    apply_on_wires, kron, kron_vec, max_abs_diff, permute_wires, symmetry_residual,
};
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::{PureState, UnitaryOp};
use crate::scalar::{CVector, Real};
use crate::uqt::compose::MAX_TRIALS;
use crate::uqt::program::conjugated;
use crate::uqt::{bell_measure_pair, BellBasis, ByproductStrategy};

use super::code::Code;

/// Physical qubits allowed in the four-block composition state.
pub const MAX_COMPOSITION_QUBITS: usize = 12;

/// `(V ⊗ V)|ω⟩` on two code blocks.
pub fn logical_ebit<R: Real>(code: &Code<R>) -> PureState<R> {
    let v = code.isometry();
    let amps = kron(v, v) * ebit::<R>(code.logical_dim());
    let n = code.physical_dim();
    PureState::from_parts_unchecked(amps, vec![n, n])
}

/// `(U ⊗ I)(V ⊗ V)|ω⟩` for a physical `U` preserving the code space.
#[derive(Debug, Clone)]
pub struct LogicalProgram<R: Real> {
    code: Code<R>,
    physical: UnitaryOp<R>,
    logical: crate::scalar::CMatrix<R>,
    state: PureState<R>,
    factors: Option<(UnitaryOp<R>, UnitaryOp<R>)>,
}

impl<R: Real> LogicalProgram<R> {
    pub fn new(code: &Code<R>, physical: UnitaryOp<R>) -> Result<Self> {
        let logical =
            code.logical_action(physical.matrix(), R::default_tolerance() * R::of(100.0))?;
        let state = logical_ebit(code).apply(&physical, &[0])?;
        Ok(Self {
            code: code.clone(),
            physical,
            logical,
            state,
            factors: None,
        })
    }

    pub fn identity(code: &Code<R>) -> Self {
        Self::new(code, UnitaryOp::identity(code.physical_dim()))
            .expect("identity preserves every code")
    }

    /// Attaches code-preserving factors `U = S1 S2` whose logical actions are
    /// symmetric.
    pub fn with_factors(mut self, s1: UnitaryOp<R>, s2: UnitaryOp<R>) -> Result<Self> {
        let tol = R::default_tolerance() * R::of(100.0);
        let prod = s1.matrix() * s2.matrix();
        for s in [&s1, &s2] {
            let l = self.code.logical_action(s.matrix(), tol)?;
            if symmetry_residual(&l) > tol {
                return Err(Error::Validation(
                    "factor is not symmetric on the code".into(),
                ));
            }
        }
        let lp = self.code.logical_action(&prod, tol)?;
        if max_abs_diff(&lp, &self.logical) > tol {
            return Err(Error::Validation(
                "factors do not reproduce the logical gate".into(),
            ));
        }
        self.factors = Some((s1, s2));
        Ok(self)
    }

    pub fn code(&self) -> &Code<R> {
        &self.code
    }

    pub fn physical(&self) -> &UnitaryOp<R> {
        &self.physical
    }

    pub fn logical(&self) -> &crate::scalar::CMatrix<R> {
        &self.logical
    }

    pub fn state(&self) -> &PureState<R> {
        &self.state
    }

    /// `(V† ⊗ V†)` applied to the state: the logical Choi vector.
    pub fn decoded(&self) -> CVector<R> {
        let vd = self.code.isometry().adjoint();
        kron(&vd, &vd) * self.state.amplitudes()
    }

    /// `|⟨ω_{U_L}|decoded⟩|²`.
    pub fn fidelity_with_logical(&self, u: &crate::scalar::CMatrix<R>) -> R {
        let d = self.code.logical_dim();
        let target = kron(u, &crate::qkernel::linalg::identity(d)) * ebit::<R>(d);
        target.dotc(&self.decoded()).norm_sqr()
    }
}

#[derive(Debug, Clone)]
pub struct LogicalComposition<R: Real> {
    pub program: LogicalProgram<R>,
    pub rounds: usize,
    pub outcomes: Vec<usize>,
}

fn same_code<R: Real>(a: &Code<R>, b: &Code<R>) -> bool {
    a.n() == b.n() && a.k() == b.k() && a.isometry() == b.isometry()
}

/// Composition of encoded programs with Bell measurements in the encoded
/// basis `(V σ_k ⊗ V)|ω⟩`; ancilla blocks are the programs' own code blocks.
pub fn logical_compose<R: Real>(
    p1: &LogicalProgram<R>,
    p2: &LogicalProgram<R>,
    strategy: ByproductStrategy,
    rng: &mut RngStream,
) -> Result<LogicalComposition<R>> {
    let code = &p1.code;
    if !same_code(code, &p2.code) {
        return Err(Error::Configuration(
            "programs are encoded in different codes".into(),
        ));
    }
    if 4 * code.n() > MAX_COMPOSITION_QUBITS {
        return Err(Error::Configuration(format!(
            "composition of {}-qubit blocks exceeds {MAX_COMPOSITION_QUBITS} physical qubits",
            code.n()
        )));
    }
    let basis = BellBasis::<R>::default_for(code.logical_dim()).encoded(code.isometry())?;
    let n = code.physical_dim();
    let pair = |a: &CVector<R>, b: &CVector<R>| {
        PureState::from_parts_unchecked(kron_vec(a, b), vec![n, n, n, n])
    };
    let swap = |v: &CVector<R>| permute_wires(v, &[n, n], &[1, 0]);
    let correct = |v: &CVector<R>, s: &crate::scalar::CMatrix<R>, k: usize| {
        let c = conjugated(s, &code.encode_operator(basis.sigma(k)));
        apply_on_wires(v, &[n, n], &c, &[0])
    };
    let (v, rounds, outcomes) = match strategy {
        ByproductStrategy::RepeatUntilSuccess => {
            let joint = pair(p1.state.amplitudes(), p2.state.amplitudes());
            let mut outcomes = Vec::new();
            let mut done = None;
            for trial in 1..=MAX_TRIALS {
                let out = bell_measure_pair(&joint, 0, 3, &basis, rng)?;
                outcomes.push(out.k);
                if out.k == 0 {
                    done = Some((swap(out.state.amplitudes())?, trial));
                    break;
                }
            }
            let (v, trials) = done.ok_or_else(|| {
                Error::Estimation(format!("no trivial outcome within {MAX_TRIALS} trials"))
            })?;
            (v, trials, outcomes)
        }
        ByproductStrategy::CorrectionTable => {
            let joint = pair(p1.state.amplitudes(), p2.state.amplitudes());
            let out = bell_measure_pair(&joint, 0, 3, &basis, rng)?;
            let v = correct(&swap(out.state.amplitudes())?, p2.physical.matrix(), out.k)?;
            (v, 1, vec![out.k])
        }
        ByproductStrategy::SymmetricPair => {
            let tol = R::default_tolerance() * R::of(100.0);
            let rounds: Vec<UnitaryOp<R>> = match &p2.factors {
                Some((s1, s2)) => vec![s2.clone(), s1.clone()],
                None if symmetry_residual(&p2.logical) <= tol => vec![p2.physical.clone()],
                None => {
                    return Err(Error::Configuration(
                        "logical gate is not symmetric and has no symmetric factors".into(),
                    ))
                }
            };
            let mut v = p1.state.amplitudes().clone();
            let mut outcomes = Vec::new();
            for s in &rounds {
                let resource = logical_ebit(code).apply(s, &[0])?;
                let out = bell_measure_pair(&pair(&v, resource.amplitudes()), 0, 2, &basis, rng)?;
                outcomes.push(out.k);
                v = correct(&swap(out.state.amplitudes())?, s.matrix(), out.k)?;
            }
            (v, 1, outcomes)
        }
    };
    let physical = UnitaryOp::from_matrix_unchecked(p2.physical.matrix() * p1.physical.matrix());
    let logical = &p2.logical * &p1.logical;
    let state = PureState::normalized(v, vec![n, n])?;
    Ok(LogicalComposition {
        program: LogicalProgram {
            code: code.clone(),
            physical,
            logical,
            state,
            factors: None,
        },
        rounds,
        outcomes,
    })
}
