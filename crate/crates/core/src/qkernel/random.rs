//! Seeded random unitaries, states and channels for tests and demos.

use crate::qkernel::rng::RngStream;
use crate::qkernel::state::{DensityOperator, KrausChannel, PureState, UnitaryOp};
use crate::scalar::{cabs, CMatrix, CVector, Real, C};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Real>(rows: usize, cols: usize, rng: &mut RngStream) -> CMatrix<R> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        C::new(
            R::of(rng.standard_normal() * s),
            R::of(rng.standard_normal() * s),
        )
    })
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase fixing).
pub fn haar_unitary<R: Real>(d: usize, rng: &mut RngStream) -> UnitaryOp<R> {
    let g = ginibre::<R>(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let n = cabs(diag);
        let phase = if n > R::zero() {
            diag.unscale(n)
        } else {
            C::new(R::one(), R::zero())
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOp::from_matrix_unchecked(q)
}

/// Haar unitary rescaled to unit determinant.
pub fn haar_special_unitary<R: Real>(d: usize, rng: &mut RngStream) -> UnitaryOp<R> {
    let u = haar_unitary::<R>(d, rng).into_matrix();
    let det = u.determinant();
    let arg = det.im.atan2(det.re) / R::count(d);
    let phase = C::new(arg.cos(), -arg.sin());
    UnitaryOp::from_matrix_unchecked(u * phase)
}

pub fn random_state<R: Real>(dims: Vec<usize>, rng: &mut RngStream) -> PureState<R> {
    let d: usize = dims.iter().product();
    let v: CVector<R> = ginibre::<R>(d, 1, rng).column(0).into_owned();
    PureState::normalized(v, dims).expect("non-zero Gaussian vector")
}

/// Full-rank random density operator `GG†/tr(GG†)`.
pub fn random_density<R: Real>(dims: Vec<usize>, rng: &mut RngStream) -> DensityOperator<R> {
    let d: usize = dims.iter().product();
    let g = ginibre::<R>(d, d, rng);
    let m = &g * g.adjoint();
    let tr = crate::qkernel::linalg::trace(&m).re;
    DensityOperator::from_parts_unchecked(m.unscale(tr), dims)
}

/// Random channel with `rank` Kraus operators cut from a Haar isometry.
pub fn random_channel<R: Real>(d: usize, rank: usize, rng: &mut RngStream) -> KrausChannel<R> {
    let w = haar_unitary::<R>(d * rank, rng).into_matrix();
    let kraus = (0..rank)
        .map(|i| CMatrix::from_fn(d, d, |a, b| w[(a * rank + i, b)]))
        .collect();
    KrausChannel::from_kraus_unchecked(kraus)
}
