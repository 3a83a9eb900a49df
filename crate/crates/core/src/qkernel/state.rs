//! Validated quantum objects in dense form.

use crate::error::{dim_err, Error, Result};
use crate::qkernel::linalg::{
    all_finite, apply_on_wires, eigh, hermiticity_residual, kron, kron_vec, max_abs_diff,
    overlap_sq, partial_trace_matrix, partial_trace_pure, trace, unitarity_residual, zero,
};
use crate::scalar::{re, CMatrix, CVector, Real};

fn check_dims(dims: &[usize], dim: usize) -> Result<()> {
    if dims.iter().product::<usize>() != dim || dims.contains(&0) {
        return dim_err(format!(
            "subsystem dims {dims:?} do not factor dimension {dim}"
        ));
    }
    Ok(())
}

/// Normalised state vector with a declared tensor factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<R: Real> {
    amplitudes: CVector<R>,
    dims: Vec<usize>,
}

impl<R: Real> PureState<R> {
    pub fn new(amplitudes: CVector<R>, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerance(amplitudes, dims, R::default_tolerance())
    }

    pub fn with_tolerance(amplitudes: CVector<R>, dims: Vec<usize>, tol: R) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        if !amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm_squared();
        if (norm - R::one()).abs() > tol {
            return Err(Error::Validation(format!(
                "state norm² {} differs from 1",
                norm.as_f64()
            )));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Normalises an arbitrary non-zero vector.
    pub fn normalized(amplitudes: CVector<R>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let n = amplitudes.norm();
        if n <= R::zero() || !n.is_finite() {
            return Err(Error::Numerical("cannot normalise a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(n),
            dims,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if index >= dim {
            return Err(Error::Argument(format!("basis index {index} >= {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = re(R::one());
        Self::new(v, dims)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector<R> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector<R> {
        self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            dims,
        }
    }

    pub fn density(&self) -> DensityOperator<R> {
        DensityOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            dims: self.dims.clone(),
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> R {
        if self.dim() != other.dim() {
            return R::zero();
        }
        overlap_sq(&self.amplitudes, &other.amplitudes)
    }

    /// Applies a unitary to the listed subsystems.
    pub fn apply(&self, u: &UnitaryOp<R>, wires: &[usize]) -> Result<Self> {
        Ok(Self {
            amplitudes: apply_on_wires(&self.amplitudes, &self.dims, u.matrix(), wires)?,
            dims: self.dims.clone(),
        })
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator<R>> {
        let kept: Vec<usize> = {
            let mut k = keep.to_vec();
            k.sort_unstable();
            k
        };
        let matrix = partial_trace_pure(&self.amplitudes, &self.dims, &kept)?;
        Ok(DensityOperator {
            matrix,
            dims: kept.iter().map(|&i| self.dims[i]).collect(),
        })
    }

    /// Reorders subsystems: new wire `p` is old wire `perm[p]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let amplitudes = crate::qkernel::linalg::permute_wires(&self.amplitudes, &self.dims, perm)?;
        Ok(Self {
            amplitudes,
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
        })
    }

    pub(crate) fn from_parts_unchecked(amplitudes: CVector<R>, dims: Vec<usize>) -> Self {
        Self { amplitudes, dims }
    }
}

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<R: Real> {
    matrix: CMatrix<R>,
    dims: Vec<usize>,
}

impl<R: Real> DensityOperator<R> {
    pub fn new(matrix: CMatrix<R>, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerance(matrix, dims, R::default_tolerance())
    }

    pub fn with_tolerance(matrix: CMatrix<R>, dims: Vec<usize>, tol: R) -> Result<Self> {
        if !matrix.is_square() {
            return dim_err("density operator must be square");
        }
        check_dims(&dims, matrix.nrows())?;
        if !all_finite(&matrix) {
            return Err(Error::Validation("non-finite entry".into()));
        }
        if hermiticity_residual(&matrix) > tol {
            return Err(Error::Validation(
                "density operator is not Hermitian".into(),
            ));
        }
        let tr = trace(&matrix);
        if (tr.re - R::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::Validation(format!(
                "trace {} differs from 1",
                tr.re.as_f64()
            )));
        }
        let (vals, _) = eigh(&matrix);
        if vals.first().is_some_and(|&v| v < -tol) {
            return Err(Error::Validation(format!(
                "negative eigenvalue {:e}",
                vals[0].as_f64()
            )));
        }
        Ok(Self { matrix, dims })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            matrix: CMatrix::identity(d, d).unscale(R::count(d)),
            dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<R> {
        self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: kron(&self.matrix, &other.matrix),
            dims,
        }
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> R {
        // tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ
        self.matrix
            .iter()
            .fold(R::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        let matrix = partial_trace_matrix(&self.matrix, &self.dims, &kept)?;
        Ok(Self {
            matrix,
            dims: kept.iter().map(|&i| self.dims[i]).collect(),
        })
    }

    pub fn trace_distance(&self, other: &Self) -> R {
        crate::qkernel::linalg::trace_distance(&self.matrix, &other.matrix)
    }

    pub(crate) fn from_parts_unchecked(matrix: CMatrix<R>, dims: Vec<usize>) -> Self {
        Self { matrix, dims }
    }
}

/// Unitary operator.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp<R: Real> {
    matrix: CMatrix<R>,
}

impl<R: Real> UnitaryOp<R> {
    pub fn new(matrix: CMatrix<R>) -> Result<Self> {
        Self::with_tolerance(matrix, R::default_tolerance())
    }

    pub fn with_tolerance(matrix: CMatrix<R>, tol: R) -> Result<Self> {
        if !matrix.is_square() {
            return dim_err("unitary must be square");
        }
        if !all_finite(&matrix) {
            return Err(Error::Validation("non-finite entry".into()));
        }
        let r = unitarity_residual(&matrix);
        if r > tol {
            return Err(Error::Validation(format!(
                "not unitary (residual {:e})",
                r.as_f64()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<R> {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// `self · other` (apply `other` first).
    pub fn then_after(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return dim_err(format!("{} vs {}", self.dim(), other.dim()));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    pub fn is_symmetric(&self, tol: R) -> bool {
        max_abs_diff(&self.matrix, &self.matrix.transpose()) <= tol
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<R>) -> Self {
        Self { matrix }
    }
}

/// Channel in Kraus form, `ρ ↦ Σ K ρ K†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<R: Real> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix<R>>,
}

impl<R: Real> KrausChannel<R> {
    pub fn new(kraus: Vec<CMatrix<R>>) -> Result<Self> {
        Self::with_tolerance(kraus, R::default_tolerance())
    }

    pub fn with_tolerance(kraus: Vec<CMatrix<R>>, tol: R) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::Argument("empty Kraus list".into()));
        };
        let (dim_out, dim_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (dim_out, dim_in)) {
            return dim_err("Kraus operators have differing shapes");
        }
        if !kraus.iter().all(all_finite) {
            return Err(Error::Validation("non-finite Kraus entry".into()));
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
        };
        let r = ch.tp_residual();
        if r > tol {
            return Err(Error::NotCptp {
                residual: r.as_f64(),
            });
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![CMatrix::identity(d, d)],
        }
    }

    pub fn unitary(u: &UnitaryOp<R>) -> Self {
        Self {
            dim_in: u.dim(),
            dim_out: u.dim(),
            kraus: vec![u.matrix().clone()],
        }
    }

    /// Complete dephasing in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut p = CMatrix::zeros(d, d);
                p[(i, i)] = re(R::one());
                p
            })
            .collect();
        Self {
            dim_in: d,
            dim_out: d,
            kraus,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix<R>] {
        &self.kraus
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn tp_residual(&self) -> R {
        let mut acc = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        max_abs_diff(&acc, &CMatrix::identity(self.dim_in, self.dim_in))
    }

    /// Applies the channel to an arbitrary operator (linear extension).
    pub fn apply_matrix(&self, m: &CMatrix<R>) -> Result<CMatrix<R>> {
        if m.nrows() != self.dim_in || m.ncols() != self.dim_in {
            return dim_err(format!(
                "channel input {} vs operator {}",
                self.dim_in,
                m.nrows()
            ));
        }
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    pub(crate) fn from_kraus_unchecked(kraus: Vec<CMatrix<R>>) -> Self {
        let (dim_out, dim_in) = kraus[0].shape();
        Self {
            dim_in,
            dim_out,
            kraus,
        }
    }
}

/// Hermitian observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable<R: Real> {
    matrix: CMatrix<R>,
}

impl<R: Real> Observable<R> {
    pub fn new(matrix: CMatrix<R>) -> Result<Self> {
        Self::with_tolerance(matrix, R::default_tolerance())
    }

    pub fn with_tolerance(matrix: CMatrix<R>, tol: R) -> Result<Self> {
        if !matrix.is_square() {
            return dim_err("observable must be square");
        }
        if !all_finite(&matrix) || hermiticity_residual(&matrix) > tol {
            return Err(Error::Validation("observable is not Hermitian".into()));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn trace(&self) -> R {
        trace(&self.matrix).re
    }

    /// Distinct eigenvalues with their spectral projectors.
    pub fn spectral(&self, tol: R) -> Vec<(R, CMatrix<R>)> {
        let (vals, vecs) = eigh(&self.matrix);
        let mut out: Vec<(R, CMatrix<R>)> = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            let col = vecs.column(i);
            let proj = col * col.adjoint();
            match out.last_mut() {
                Some((last, p)) if (*v - *last).abs() <= tol => *p += proj,
                _ => out.push((*v, proj)),
            }
        }
        out
    }
}

/// `Σ K ρ K†`.
pub fn apply_channel<R: Real>(
    ch: &KrausChannel<R>,
    rho: &DensityOperator<R>,
) -> Result<DensityOperator<R>> {
    let matrix = ch.apply_matrix(rho.matrix())?;
    let dims = if ch.dim_out == ch.dim_in {
        rho.dims().to_vec()
    } else {
        vec![ch.dim_out]
    };
    Ok(DensityOperator::from_parts_unchecked(matrix, dims))
}

/// `tr(ρ²)`.
pub fn purity<R: Real>(rho: &DensityOperator<R>) -> R {
    rho.purity()
}

/// `tr(Oρ)` with the imaginary residue discarded.
pub fn expectation<R: Real>(obs: &Observable<R>, rho: &DensityOperator<R>) -> Result<R> {
    if obs.dim() != rho.dim() {
        return dim_err(format!("observable {} vs state {}", obs.dim(), rho.dim()));
    }
    let m = obs.matrix();
    let r = rho.matrix();
    let mut acc = zero::<R>();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += m[(i, j)] * r[(j, i)];
        }
    }
    Ok(acc.re)
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation_pure<R: Real>(obs: &Observable<R>, psi: &PureState<R>) -> Result<R> {
    if obs.dim() != psi.dim() {
        return dim_err(format!("observable {} vs state {}", obs.dim(), psi.dim()));
    }
    Ok(psi.amplitudes().dotc(&(obs.matrix() * psi.amplitudes())).re)
}

/// Reduced density operator over `keep`, ascending order.
pub fn partial_trace<R: Real>(
    rho: &DensityOperator<R>,
    keep: &[usize],
) -> Result<DensityOperator<R>> {
    rho.partial_trace(keep)
}
