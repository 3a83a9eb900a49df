//! Stinespring dilation of a channel.

use crate::error::Result;
use crate::qkernel::linalg::complete_to_unitary;
use crate::qkernel::state::{KrausChannel, UnitaryOp};
use crate::scalar::{CMatrix, Real};

/// Unitary on system ⊗ ancilla with `(I ⊗ ⟨i|) U (I ⊗ |0⟩) = K_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation<R: Real> {
    pub unitary: UnitaryOp<R>,
    pub ancilla_dim: usize,
}

pub fn dilate<R: Real>(ch: &KrausChannel<R>) -> Result<Dilation<R>> {
    dilate_tol(ch, R::default_tolerance())
}

pub fn dilate_tol<R: Real>(ch: &KrausChannel<R>, tol: R) -> Result<Dilation<R>> {
    let d = ch.dim_in();
    let r = ch.kraus().len();
    // columns (s, 0) of U: row index (a, i) carries K_i[a, s]
    let mut iso = CMatrix::zeros(d * r, d);
    for (i, k) in ch.kraus().iter().enumerate() {
        for a in 0..d {
            for s in 0..d {
                iso[(a * r + i, s)] = k[(a, s)];
            }
        }
    }
    // place the isometry columns at (s, 0) and complete the rest
    let full = complete_to_unitary(&iso, tol)?;
    let mut u = CMatrix::zeros(d * r, d * r);
    let mut free = d;
    for col in 0..d * r {
        let (s, anc) = (col / r, col % r);
        let src = if anc == 0 {
            s
        } else {
            free += 1;
            free - 1
        };
        u.set_column(col, &full.column(src));
    }
    Ok(Dilation {
        unitary: UnitaryOp::with_tolerance(u, tol * R::of(10.0))?,
        ancilla_dim: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkernel::linalg::max_abs_diff;
    use crate::qkernel::random::{random_channel, random_density};
    use crate::qkernel::rng::RngStream;
    use crate::qkernel::state::{apply_channel, DensityOperator};

    #[test]
    fn dilation_reproduces_channel() {
        let mut rng = RngStream::new(8, 1);
        for (d, rank) in [(2, 1), (2, 3), (3, 2), (4, 4)] {
            let ch = random_channel::<f64>(d, rank, &mut rng);
            let dil = dilate(&ch).unwrap();
            let rho = random_density::<f64>(vec![d], &mut rng);
            let mut zero =
                DensityOperator::<f64>::maximally_mixed(vec![dil.ancilla_dim]).into_matrix();
            zero.fill(crate::scalar::c(0., 0.));
            zero[(0, 0)] = crate::scalar::c(1., 0.);
            let joint = crate::qkernel::kron(rho.matrix(), &zero);
            let u = dil.unitary.matrix();
            let out = u * joint * u.adjoint();
            let reduced =
                crate::qkernel::linalg::partial_trace_matrix(&out, &[d, dil.ancilla_dim], &[0])
                    .unwrap();
            let direct = apply_channel(&ch, &rho).unwrap();
            assert!(max_abs_diff(&reduced, direct.matrix()) < 1e-10);
            for (i, k) in ch.kraus().iter().enumerate() {
                let block = CMatrix::from_fn(d, d, |a, s| u[(a * rank + i, s * rank)]);
                assert!(max_abs_diff(&block, k) < 1e-12);
            }
        }
    }
}
