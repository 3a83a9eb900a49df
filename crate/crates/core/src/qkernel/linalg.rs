//! Dense kernels: Kronecker products, wire-local operator application,
//! partial traces and Hermitian/unitary eigendecompositions.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{dim_err, Error, Result};
use crate::scalar::{cabs, re, CMatrix, CVector, Real, C};

pub fn identity<R: Real>(d: usize) -> CMatrix<R> {
    CMatrix::identity(d, d)
}

/// Kronecker product `a ⊗ b`; the left factor is the most significant index.
pub fn kron<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> CMatrix<R> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == C::new(R::zero(), R::zero()) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all<R: Real>(factors: &[CMatrix<R>]) -> CMatrix<R> {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| kron(&acc, f))
}

pub fn kron_vec<R: Real>(a: &CVector<R>, b: &CVector<R>) -> CVector<R> {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = *x * *y;
        }
    }
    out
}

pub fn max_abs<R: Real>(m: &CMatrix<R>) -> R {
    m.iter().fold(R::zero(), |acc, z| acc.max(cabs(*z)))
}

pub fn max_abs_diff<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> R {
    if a.shape() != b.shape() {
        return R::max_value().unwrap_or_else(R::one);
    }
    a.iter()
        .zip(b.iter())
        .fold(R::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

pub fn trace<R: Real>(m: &CMatrix<R>) -> C<R> {
    (0..m.nrows().min(m.ncols())).fold(C::new(R::zero(), R::zero()), |acc, i| acc + m[(i, i)])
}

pub fn all_finite<R: Real>(m: &CMatrix<R>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖U†U − I‖_max`.
pub fn unitarity_residual<R: Real>(m: &CMatrix<R>) -> R {
    if !m.is_square() {
        return R::max_value().unwrap_or_else(R::one);
    }
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

pub fn hermiticity_residual<R: Real>(m: &CMatrix<R>) -> R {
    if !m.is_square() {
        return R::max_value().unwrap_or_else(R::one);
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn symmetry_residual<R: Real>(m: &CMatrix<R>) -> R {
    max_abs_diff(m, &m.transpose())
}

/// Row-major strides for a big-endian tensor factorisation.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn check_wires(dims: &[usize], wires: &[usize]) -> Result<()> {
    for (n, &w) in wires.iter().enumerate() {
        if w >= dims.len() {
            return Err(Error::Argument(format!(
                "wire {w} out of range for {} subsystems",
                dims.len()
            )));
        }
        if wires[..n].contains(&w) {
            return Err(Error::Argument(format!("wire {w} repeated")));
        }
    }
    Ok(())
}

/// Offsets of every multi-index over `wires` (in the listed order) and the
/// base indices of every configuration of the remaining wires.
fn split_offsets(dims: &[usize], wires: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let st = strides(dims);
    let mut local = vec![0usize];
    for &w in wires {
        let mut next = Vec::with_capacity(local.len() * dims[w]);
        for &o in &local {
            for digit in 0..dims[w] {
                next.push(o + digit * st[w]);
            }
        }
        local = next;
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !wires.contains(i)).collect();
    let mut base = vec![0usize];
    for &w in &rest {
        let mut next = Vec::with_capacity(base.len() * dims[w]);
        for &o in &base {
            for digit in 0..dims[w] {
                next.push(o + digit * st[w]);
            }
        }
        base = next;
    }
    (local, base)
}

/// Applies `op` to the listed wires of a state vector.
pub fn apply_on_wires<R: Real>(
    state: &CVector<R>,
    dims: &[usize],
    op: &CMatrix<R>,
    wires: &[usize],
) -> Result<CVector<R>> {
    check_wires(dims, wires)?;
    let total: usize = dims.iter().product();
    if state.len() != total {
        return dim_err(format!(
            "state length {} vs dims product {total}",
            state.len()
        ));
    }
    let sub: usize = wires.iter().map(|&w| dims[w]).product();
    if op.nrows() != sub || op.ncols() != sub {
        return dim_err(format!(
            "operator {}x{} on wires of total dimension {sub}",
            op.nrows(),
            op.ncols()
        ));
    }
    let (local, base) = split_offsets(dims, wires);
    let mut out = CVector::zeros(total);
    let mut buf = vec![C::new(R::zero(), R::zero()); sub];
    for &b in &base {
        for (t, &o) in local.iter().enumerate() {
            buf[t] = state[b + o];
        }
        for (r, &o) in local.iter().enumerate() {
            let mut acc = C::new(R::zero(), R::zero());
            for (t, x) in buf.iter().enumerate() {
                acc += op[(r, t)] * *x;
            }
            out[b + o] = acc;
        }
    }
    Ok(out)
}

/// Left-multiplies every column of `m` by `op` acting on `wires`.
pub fn left_apply_on_wires<R: Real>(
    m: &CMatrix<R>,
    dims: &[usize],
    op: &CMatrix<R>,
    wires: &[usize],
) -> Result<CMatrix<R>> {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let col = apply_on_wires(&m.column(j).into_owned(), dims, op, wires)?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// `op · m · op†` with `op` acting on `wires`.
pub fn conjugate_on_wires<R: Real>(
    m: &CMatrix<R>,
    dims: &[usize],
    op: &CMatrix<R>,
    wires: &[usize],
) -> Result<CMatrix<R>> {
    let left = left_apply_on_wires(m, dims, op, wires)?;
    Ok(left_apply_on_wires(&left.adjoint(), dims, op, wires)?.adjoint())
}

/// Dense matrix of `op` acting on `wires` of the full space.
pub fn embed_on_wires<R: Real>(
    dims: &[usize],
    op: &CMatrix<R>,
    wires: &[usize],
) -> Result<CMatrix<R>> {
    let total: usize = dims.iter().product();
    left_apply_on_wires(&identity(total), dims, op, wires)
}

/// Reorders subsystems: output wire `p` is input wire `perm[p]`.
pub fn permute_wires<R: Real>(
    state: &CVector<R>,
    dims: &[usize],
    perm: &[usize],
) -> Result<CVector<R>> {
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::Argument(format!("{perm:?} is not a permutation")));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let old_st = strides(dims);
    let new_st = strides(&new_dims);
    let mut out = CVector::zeros(state.len());
    for (idx, amp) in state.iter().enumerate() {
        let mut target = 0;
        for (p, &w) in perm.iter().enumerate() {
            let digit = (idx / old_st[w]) % dims[w];
            target += digit * new_st[p];
        }
        out[target] = *amp;
    }
    Ok(out)
}

/// Permutation matrix `P` with `P·vec = permute_wires(vec)`.
pub fn permutation_matrix<R: Real>(dims: &[usize], perm: &[usize]) -> Result<CMatrix<R>> {
    let total: usize = dims.iter().product();
    let mut out = CMatrix::zeros(total, total);
    for j in 0..total {
        let mut e = CVector::zeros(total);
        e[j] = re(R::one());
        out.set_column(j, &permute_wires(&e, dims, perm)?);
    }
    Ok(out)
}

fn keep_offsets(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    check_wires(dims, keep)?;
    if keep.is_empty() {
        return Err(Error::Argument("keep set is empty".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    Ok(split_offsets(dims, &sorted))
}

/// Reduced density matrix of a pure state on the kept wires (ascending order).
pub fn partial_trace_pure<R: Real>(
    state: &CVector<R>,
    dims: &[usize],
    keep: &[usize],
) -> Result<CMatrix<R>> {
    let (kept, traced) = keep_offsets(dims, keep)?;
    let n = kept.len();
    let mut out = CMatrix::zeros(n, n);
    for (i, &oi) in kept.iter().enumerate() {
        for (j, &oj) in kept.iter().enumerate().skip(i) {
            let mut acc = C::new(R::zero(), R::zero());
            for &t in &traced {
                acc += state[oi + t] * state[oj + t].conj();
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc.conj();
        }
    }
    Ok(out)
}

/// Partial trace of an operator, keeping `keep` (ascending order).
pub fn partial_trace_matrix<R: Real>(
    m: &CMatrix<R>,
    dims: &[usize],
    keep: &[usize],
) -> Result<CMatrix<R>> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return dim_err(format!(
            "{}x{} operator vs dims product {total}",
            m.nrows(),
            m.ncols()
        ));
    }
    let (kept, traced) = keep_offsets(dims, keep)?;
    let n = kept.len();
    let mut out = CMatrix::zeros(n, n);
    for (i, &oi) in kept.iter().enumerate() {
        for (j, &oj) in kept.iter().enumerate() {
            let mut acc = C::new(R::zero(), R::zero());
            for &t in &traced {
                acc += m[(oi + t, oj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh<R: Real>(m: &CMatrix<R>) -> (Vec<R>, CMatrix<R>) {
    let herm = (m + m.adjoint()).scale(R::of(0.5));
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Positive square root of a positive semidefinite Hermitian matrix.
pub fn sqrt_psd<R: Real>(m: &CMatrix<R>) -> CMatrix<R> {
    let (vals, vecs) = eigh(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| re(v.max(R::zero()).sqrt())),
    ));
    &vecs * d * vecs.adjoint()
}

/// Spectral decomposition of a unitary, `U = V·diag(λ)·V†`.
#[derive(Debug, Clone)]
pub struct UnitaryEigen<R: Real> {
    pub eigenvalues: Vec<C<R>>,
    pub vectors: CMatrix<R>,
}

const PENCIL: [f64; 3] = [
    0.618_033_988_749_894_8,
    -0.414_213_562_373_095_1,
    1.324_717_957_244_746,
];

/// Diagonalises a normal matrix through a Hermitian pencil `A + cB` of its
/// Hermitian and anti-Hermitian parts; eigenvector blocks whose pencil
/// eigenvalues collide are re-diagonalised with a different pencil slope so
/// that degenerate eigenspaces come out orthonormal.
fn diagonalise_normal<R: Real>(m: &CMatrix<R>, level: usize) -> CMatrix<R> {
    let n = m.nrows();
    if n == 1 {
        return identity(1);
    }
    let half = R::of(0.5);
    let a = (m + m.adjoint()).scale(half);
    let b = (m - m.adjoint()) * C::new(R::zero(), -half);
    let slope = R::of(PENCIL[level % PENCIL.len()]);
    let pencil = &a + b.scale(slope);
    let (vals, mut vecs) = eigh(&pencil);
    if level + 1 >= PENCIL.len() {
        return vecs;
    }
    let scale = R::one() + slope.abs();
    let gap = R::of(1e-7) * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= gap {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let block = vecs.columns(start, size).into_owned();
            let compressed = block.adjoint() * m * &block;
            let inner = diagonalise_normal(&compressed, level + 1);
            let rotated = block * inner;
            vecs.columns_mut(start, size).copy_from(&rotated);
        }
        start = end;
    }
    vecs
}

/// Eigendecomposition of a unitary matrix.
pub fn eig_unitary<R: Real>(u: &CMatrix<R>, tol: R) -> Result<UnitaryEigen<R>> {
    if unitarity_residual(u) > tol {
        return Err(Error::Validation("matrix is not unitary".into()));
    }
    let vectors = diagonalise_normal(u, 0);
    let diag = vectors.adjoint() * u * &vectors;
    let eigenvalues: Vec<C<R>> = (0..u.nrows())
        .map(|i| {
            let z = diag[(i, i)];
            z.unscale(cabs(z))
        })
        .collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
    let recon = &vectors * d * vectors.adjoint();
    let err = max_abs_diff(&recon, u);
    if err > tol * R::of(10.0) || unitarity_residual(&vectors) > tol * R::of(10.0) {
        return Err(Error::Numerical(format!(
            "unitary diagonalisation did not converge (residual {:e})",
            err.as_f64()
        )));
    }
    Ok(UnitaryEigen {
        eigenvalues,
        vectors,
    })
}

/// `|⟨a|b⟩|²` for normalised vectors.
pub fn overlap_sq<R: Real>(a: &CVector<R>, b: &CVector<R>) -> R {
    a.dotc(b).norm_sqr()
}

/// Trace distance `½‖ρ − σ‖₁` between Hermitian matrices.
pub fn trace_distance<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> R {
    let (vals, _) = eigh(&(a - b));
    vals.iter().fold(R::zero(), |acc, v| acc + v.abs()) * R::of(0.5)
}

/// Completes the orthonormal columns of `iso` to a square unitary.
pub fn complete_to_unitary<R: Real>(iso: &CMatrix<R>, tol: R) -> Result<CMatrix<R>> {
    let (rows, cols) = iso.shape();
    if cols > rows {
        return dim_err(format!("isometry {rows}x{cols} has more columns than rows"));
    }
    let resid = max_abs_diff(&(iso.adjoint() * iso), &identity(cols));
    if resid > tol {
        return Err(Error::Validation(format!(
            "columns are not orthonormal (residual {:e})",
            resid.as_f64()
        )));
    }
    let mut basis: Vec<CVector<R>> = (0..cols).map(|j| iso.column(j).into_owned()).collect();
    while basis.len() < rows {
        // Pick the standard basis vector with the largest component outside the current span.
        let mut best: Option<(R, CVector<R>)> = None;
        for e in 0..rows {
            let mut v = CVector::zeros(rows);
            v[e] = re(R::one());
            for _ in 0..2 {
                for q in &basis {
                    let p = q.dotc(&v);
                    v -= q * p;
                }
            }
            let n = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, v));
            }
        }
        let (n, v) = best.expect("rows > 0");
        basis.push(v.unscale(n));
    }
    Ok(CMatrix::from_columns(&basis))
}

pub(crate) fn zero<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkernel::gates;
    use crate::qkernel::random::haar_unitary;
    use crate::qkernel::rng::RngStream;
    use crate::scalar::c;

    fn ket(bits: &[usize], dims: &[usize]) -> CVector<f64> {
        let st = strides(dims);
        let idx: usize = bits.iter().zip(&st).map(|(b, s)| b * s).sum();
        let mut v = CVector::zeros(dims.iter().product());
        v[idx] = c(1., 0.);
        v
    }

    #[test]
    fn kron_examples() {
        let i2 = identity::<f64>(2);
        assert_eq!(kron(&i2, &i2), identity::<f64>(4));
        let xx = kron(&gates::x::<f64>(), &gates::x());
        assert_eq!(&xx * ket(&[0, 0], &[2, 2]), ket(&[1, 1], &[2, 2]));
        let hi = kron(&gates::h::<f64>(), &i2);
        let out = &hi * ket(&[0, 0], &[2, 2]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = CVector::from_vec(vec![c(s, 0.), c(0., 0.), c(s, 0.), c(0., 0.)]);
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn wire_application_matches_embedding() {
        let mut rng = RngStream::new(4, 0);
        let dims = [2, 3, 2];
        let u = haar_unitary::<f64>(4, &mut rng).into_matrix();
        // u on wires (2, 0): reorder, apply u ⊗ I_3, reorder back
        let psi = crate::qkernel::random::random_state::<f64>(dims.to_vec(), &mut rng);
        let direct = apply_on_wires(psi.amplitudes(), &dims, &u, &[2, 0]).unwrap();
        let moved = permute_wires(psi.amplitudes(), &dims, &[2, 0, 1]).unwrap();
        let applied = kron(&u, &identity(3)) * moved;
        let back = permute_wires(&applied, &[2, 2, 3], &[1, 2, 0]).unwrap();
        assert!((direct - back).norm() < 1e-13);
    }

    #[test]
    fn eig_of_z_h_identity() {
        let tol = 1e-10;
        let z = eig_unitary(&gates::z::<f64>(), tol).unwrap();
        let mut vals: Vec<f64> = z.eigenvalues.iter().map(|v| v.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        for (k, lam) in z.eigenvalues.iter().enumerate() {
            // each eigenvector is a computational basis state up to phase
            let col = z.vectors.column(k);
            let idx = if lam.re > 0.0 { 0 } else { 1 };
            assert!((col[idx].norm_sqr() - 1.0).abs() < 1e-12);
        }
        let h = eig_unitary(&gates::h::<f64>(), tol).unwrap();
        let mut hv: Vec<f64> = h.eigenvalues.iter().map(|v| v.re).collect();
        hv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((hv[0] + 1.0).abs() < 1e-12 && (hv[1] - 1.0).abs() < 1e-12);
        let id = eig_unitary(&identity::<f64>(3), tol).unwrap();
        assert!(id.eigenvalues.iter().all(|v| (v.re - 1.0).abs() < 1e-12));
        assert!(unitarity_residual(&id.vectors) < 1e-12);
    }

    #[test]
    fn eig_of_degenerate_pauli_products() {
        let zz = kron(&gates::z::<f64>(), &gates::z());
        let xx = kron(&gates::x::<f64>(), &gates::x());
        for u in [zz, xx, kron(&gates::cz::<f64>(), &gates::y())] {
            let e = eig_unitary(&u, 1e-10).unwrap();
            assert!(unitarity_residual(&e.vectors) < 1e-12);
        }
    }

    #[test]
    fn eig_reconstructs_random_unitaries() {
        let mut rng = RngStream::new(2024, 0);
        for d in 1..=16 {
            let u = haar_unitary::<f64>(d, &mut rng).into_matrix();
            let e = eig_unitary(&u, 1e-10).unwrap();
            let dm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.eigenvalues.clone()));
            let recon = &e.vectors * dm * e.vectors.adjoint();
            assert!(max_abs_diff(&recon, &u) <= 1e-10, "d={d}");
            assert!(e.eigenvalues.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn completion_of_isometry() {
        let mut rng = RngStream::new(8, 1);
        let u = haar_unitary::<f64>(6, &mut rng).into_matrix();
        let iso = u.columns(0, 2).into_owned();
        let full = complete_to_unitary(&iso, 1e-10).unwrap();
        assert!(unitarity_residual(&full) < 1e-12);
        assert!(max_abs_diff(&full.columns(0, 2).into_owned(), &iso) < 1e-15);
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = ket(&[0], &[2]);
        let b = ket(&[1], &[2]);
        let d = trace_distance(&(&a * a.adjoint()), &(&b * b.adjoint()));
        assert!((d - 1.0).abs() < 1e-14);
    }
}
