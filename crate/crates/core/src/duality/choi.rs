//! Choi states and vectorisation.

use crate::error::{dim_err, Error, Result};
use crate::qkernel::linalg::{
    apply_on_wires, eigh, identity, kron, max_abs_diff, partial_trace_matrix, permutation_matrix,
    sqrt_psd, trace,
};
use crate::qkernel::state::{DensityOperator, KrausChannel, UnitaryOp};
use crate::scalar::{re, CMatrix, CVector, Real};

/// `|ω⟩ = Σ_i |ii⟩/√d`.
pub fn ebit<R: Real>(d: usize) -> CVector<R> {
    let mut v = CVector::zeros(d * d);
    let amp = R::one() / R::count(d).sqrt();
    for i in 0..d {
        v[i * d + i] = re(amp);
    }
    v
}

/// Dual state of a channel. Site A (the head, acted on by the channel) is the
/// most significant factor; site B is the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState<R: Real> {
    d: usize,
    state: DensityOperator<R>,
    pure: Option<CVector<R>>,
}

impl<R: Real> ChoiState<R> {
    /// Validates positivity, unit trace and `tr_A ω = I/d`.
    pub fn from_matrix(matrix: CMatrix<R>, d: usize, tol: R) -> Result<Self> {
        let state = DensityOperator::with_tolerance(matrix, vec![d, d], tol)?;
        let tail = partial_trace_matrix(state.matrix(), &[d, d], &[1])?;
        let resid = max_abs_diff(&tail, &identity::<R>(d).unscale(R::count(d)));
        if resid > tol {
            return Err(Error::NotCptp {
                residual: resid.as_f64(),
            });
        }
        Ok(Self {
            d,
            state,
            pure: None,
        })
    }

    /// Rank-one Choi state from its amplitude vector `(A ⊗ I)|ω⟩`.
    pub fn from_amplitudes(amplitudes: CVector<R>, d: usize, tol: R) -> Result<Self> {
        if amplitudes.len() != d * d {
            return dim_err(format!(
                "amplitude vector of length {} for d = {d}",
                amplitudes.len()
            ));
        }
        let matrix = &amplitudes * amplitudes.adjoint();
        let mut choi = Self::from_matrix(matrix, d, tol)?;
        choi.pure = Some(amplitudes);
        Ok(choi)
    }

    /// `|ω_U⟩ = (U ⊗ I)|ω⟩`.
    pub fn of_unitary(u: &UnitaryOp<R>) -> Self {
        let d = u.dim();
        let amps = vectorize_single(u.matrix());
        let matrix = &amps * amps.adjoint();
        Self {
            d,
            state: DensityOperator::from_parts_unchecked(matrix, vec![d, d]),
            pure: Some(amps),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        self.state.matrix()
    }

    pub fn density(&self) -> &DensityOperator<R> {
        &self.state
    }

    /// Amplitudes when the state is rank one.
    pub fn amplitudes(&self) -> Option<&CVector<R>> {
        self.pure.as_ref()
    }

    pub fn is_pure(&self) -> bool {
        self.pure.is_some()
    }

    /// `tr_A ω`, which equals `I/d` for every channel.
    pub fn tail_marginal(&self) -> CMatrix<R> {
        partial_trace_matrix(self.matrix(), &[self.d, self.d], &[1]).expect("valid dims")
    }

    /// `tr_B ω`, which equals `E(I)/d`.
    pub fn head_marginal(&self) -> CMatrix<R> {
        partial_trace_matrix(self.matrix(), &[self.d, self.d], &[0]).expect("valid dims")
    }

    /// Uhlmann fidelity; reduces to `|⟨a|b⟩|²` for rank-one states.
    pub fn fidelity(&self, other: &Self) -> R {
        if self.d != other.d {
            return R::zero();
        }
        match (&self.pure, &other.pure) {
            (Some(a), Some(b)) => a.dotc(b).norm_sqr(),
            (Some(a), None) => a.dotc(&(other.matrix() * a)).re,
            (None, Some(b)) => b.dotc(&(self.matrix() * b)).re,
            (None, None) => {
                let s = sqrt_psd(self.matrix());
                let inner = &s * other.matrix() * &s;
                let root = sqrt_psd(&inner);
                let t = trace(&root).re;
                t * t
            }
        }
    }

    /// Unvectorised operator `√d · unvec(ψ)` for a rank-one state.
    pub fn operator(&self) -> Option<CMatrix<R>> {
        let d = self.d;
        let scale = R::count(d).sqrt();
        self.pure
            .as_ref()
            .map(|v| CMatrix::from_fn(d, d, |a, b| v[a * d + b] * re(scale)))
    }
}

/// `(A ⊗ I)|ω⟩` with a single high-dimensional Bell state; entries `A_ab/√d`.
pub fn vectorize_single<R: Real>(a: &CMatrix<R>) -> CVector<R> {
    let d = a.nrows();
    let scale = R::one() / R::count(d).sqrt();
    CVector::from_fn(d * d, |i, _| a[(i / d, i % d)] * re(scale))
}

fn local_dim(total: usize, parts: usize) -> Result<usize> {
    if parts == 0 {
        return Err(Error::Argument("parts must be positive".into()));
    }
    let q = (total as f64).powf(1.0 / parts as f64).round() as usize;
    if q.checked_pow(parts as u32) != Some(total) {
        return dim_err(format!("dimension {total} is not a {parts}-th power"));
    }
    Ok(q)
}

/// Reversal `R` of `parts` subsystems of dimension `q` (the swap when `parts = 2`).
pub fn reversal<R: Real>(q: usize, parts: usize) -> CMatrix<R> {
    let perm: Vec<usize> = (0..parts).rev().collect();
    permutation_matrix(&vec![q; parts], &perm).expect("valid permutation")
}

/// `|ω⟩^{⊗n}` over heads `a_1..a_n` followed by tails `b_1..b_n`, with
/// `a_k` paired to `b_{n+1-k}` so that tails are bent in reverse order.
/// For `parts = 1` this is the single Bell state.
pub fn multipartite_ebit<R: Real>(q: usize, parts: usize) -> CVector<R> {
    let total = q.pow(parts as u32);
    let flat = ebit::<R>(total);
    if parts == 1 {
        return flat;
    }
    let r = reversal::<R>(q, parts);
    kron(&identity(total), &r) * flat
}

/// `R A^t R` for `parts > 1`, `A^t` for `parts = 1`.
pub fn tilde<R: Real>(a: &CMatrix<R>, parts: usize) -> Result<CMatrix<R>> {
    if !a.is_square() {
        return dim_err("vectorisation needs a square operator");
    }
    let q = local_dim(a.nrows(), parts)?;
    if parts == 1 {
        return Ok(a.transpose());
    }
    let r = reversal::<R>(q, parts);
    Ok(&r * a.transpose() * &r)
}

/// `|ω_A⟩ = (A ⊗ I)|ω⟩^{⊗parts}`, unnormalised for non-unitary `A`.
pub fn vectorize<R: Real>(a: &CMatrix<R>, parts: usize) -> Result<CVector<R>> {
    if !a.is_square() {
        return dim_err("vectorisation needs a square operator");
    }
    let total = a.nrows();
    let q = local_dim(total, parts)?;
    let base = multipartite_ebit::<R>(q, parts);
    apply_on_wires(&base, &[total, total], a, &[0])
}

/// The same vector computed on the tail side, `(I ⊗ Ã)|ω⟩^{⊗parts}`.
pub fn vectorize_on_tail<R: Real>(a: &CMatrix<R>, parts: usize) -> Result<CVector<R>> {
    let t = tilde(a, parts)?;
    let total = a.nrows();
    let q = local_dim(total, parts)?;
    let base = multipartite_ebit::<R>(q, parts);
    apply_on_wires(&base, &[total, total], &t, &[1])
}

/// `ω_E = (E ⊗ I)(|ω⟩⟨ω|)`.
pub fn choi_of_channel<R: Real>(ch: &KrausChannel<R>) -> Result<ChoiState<R>> {
    choi_of_channel_tol(ch, R::default_tolerance())
}

pub fn choi_of_channel_tol<R: Real>(ch: &KrausChannel<R>, tol: R) -> Result<ChoiState<R>> {
    if ch.dim_in() != ch.dim_out() {
        return dim_err("Choi states are built for dimension-preserving channels");
    }
    let r = ch.tp_residual();
    if r > tol {
        return Err(Error::NotCptp {
            residual: r.as_f64(),
        });
    }
    let d = ch.dim_in();
    let vecs: Vec<CVector<R>> = ch.kraus().iter().map(vectorize_single).collect();
    let mut matrix = CMatrix::zeros(d * d, d * d);
    for v in &vecs {
        matrix += v * v.adjoint();
    }
    let pure = if vecs.len() == 1 {
        Some(vecs[0].clone())
    } else {
        None
    };
    Ok(ChoiState {
        d,
        state: DensityOperator::from_parts_unchecked(matrix, vec![d, d]),
        pure,
    })
}

/// `E(ρ) = d · tr_B[ω_E (I ⊗ ρ^t)]`, valid for any operator `ρ`.
pub fn apply_via_choi_matrix<R: Real>(choi: &ChoiState<R>, rho: &CMatrix<R>) -> Result<CMatrix<R>> {
    let d = choi.d();
    if rho.nrows() != d || rho.ncols() != d {
        return dim_err(format!("Choi dimension {d} vs input {}", rho.nrows()));
    }
    let w = choi.matrix();
    // d · Σ_{j,k} ω[(a1, j), (a2, k)] · ρ_{jk}
    let mut out = CMatrix::zeros(d, d);
    for a1 in 0..d {
        for a2 in 0..d {
            let mut acc = crate::qkernel::linalg::zero::<R>();
            for j in 0..d {
                for k in 0..d {
                    acc += w[(a1 * d + j, a2 * d + k)] * rho[(j, k)];
                }
            }
            out[(a1, a2)] = acc * re(R::count(d));
        }
    }
    Ok(out)
}

pub fn apply_via_choi<R: Real>(
    choi: &ChoiState<R>,
    rho: &DensityOperator<R>,
) -> Result<DensityOperator<R>> {
    let m = apply_via_choi_matrix(choi, rho.matrix())?;
    Ok(DensityOperator::from_parts_unchecked(
        m,
        rho.dims().to_vec(),
    ))
}

/// Kraus operators `K_i = √(dλ_i)·unvec(v_i)` from the eigenpairs of `ω_E`.
pub fn kraus_from_choi<R: Real>(choi: &ChoiState<R>) -> Result<KrausChannel<R>> {
    kraus_from_choi_tol(choi, R::default_tolerance())
}

pub fn kraus_from_choi_tol<R: Real>(choi: &ChoiState<R>, tol: R) -> Result<KrausChannel<R>> {
    let d = choi.d();
    let resid = max_abs_diff(
        &choi.tail_marginal(),
        &identity::<R>(d).unscale(R::count(d)),
    );
    if resid > tol {
        return Err(Error::NotCptp {
            residual: resid.as_f64(),
        });
    }
    let scale_d = R::count(d);
    if let Some(v) = choi.amplitudes() {
        let k = CMatrix::from_fn(d, d, |a, b| v[a * d + b] * re(scale_d.sqrt()));
        return KrausChannel::with_tolerance(vec![k], tol * R::of(10.0));
    }
    let (vals, vecs) = eigh(choi.matrix());
    let cutoff = R::of(1e-12) * scale_d;
    let mut kraus = Vec::new();
    for (i, &lam) in vals.iter().enumerate().rev() {
        if lam <= cutoff {
            continue;
        }
        let s = (scale_d * lam).sqrt();
        let col = vecs.column(i);
        kraus.push(CMatrix::from_fn(d, d, |a, b| col[a * d + b] * re(s)));
    }
    if kraus.is_empty() {
        return Err(Error::Numerical(
            "Choi matrix has no eigenvalue above the rank cutoff".into(),
        ));
    }
    KrausChannel::with_tolerance(kraus, tol * R::of(10.0))
}
