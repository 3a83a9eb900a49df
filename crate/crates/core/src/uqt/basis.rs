//! Generalised Pauli operators and Bell bases built from them.

use crate::duality::choi::ebit;
use crate::error::{dim_err, Error, Result};
use crate::qkernel::gates;
use crate::qkernel::linalg::{apply_on_wires, identity, kron, kron_all, zero};
use crate::scalar::{c, re, CMatrix, CVector, Real};

/// Shift `X|j⟩ = |j+1 mod d⟩`.
pub fn weyl_x<R: Real>(d: usize) -> CMatrix<R> {
    CMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            re(R::one())
        } else {
            zero()
        }
    })
}

/// Clock `Z|j⟩ = e^{2πij/d}|j⟩`.
pub fn weyl_z<R: Real>(d: usize) -> CMatrix<R> {
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let th = 2.0 * std::f64::consts::PI * i as f64 / d as f64;
            c(th.cos(), th.sin())
        } else {
            zero()
        }
    })
}

/// `X^a Z^b`.
pub fn weyl<R: Real>(d: usize, a: usize, b: usize) -> CMatrix<R> {
    let x = weyl_x::<R>(d);
    let z = weyl_z::<R>(d);
    let mut xa = identity::<R>(d);
    for _ in 0..a {
        xa = &x * xa;
    }
    let mut zb = identity::<R>(d);
    for _ in 0..b {
        zb = &z * zb;
    }
    xa * zb
}

/// Tensor product of qubit Paulis indexed by base-4 digits (I, X, Y, Z),
/// the first qubit being the most significant digit.
pub fn qubit_pauli<R: Real>(qubits: usize, k: usize) -> CMatrix<R> {
    let letters = ['I', 'X', 'Y', 'Z'];
    let factors: Vec<CMatrix<R>> = (0..qubits)
        .map(|q| {
            let digit = (k >> (2 * (qubits - 1 - q))) & 3;
            gates::pauli(letters[digit]).expect("valid letter")
        })
        .collect();
    kron_all(&factors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `X^a Z^b` with `k = a·d + b`.
    Weyl,
    /// Tensor products of qubit Paulis; needs `d = 2^n`.
    QubitPauli,
}

/// Orthonormal Bell vectors `|ω_{σ_k}⟩ = (σ_k ⊗ I)|ω⟩`, optionally encoded
/// as `(V σ_k ⊗ V)|ω⟩` inside a larger space. Encoded bases are incomplete;
/// the remainder is reported as a complement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BellBasis<R: Real> {
    d: usize,
    kind: BasisKind,
    side_dim: usize,
    sigmas: Vec<CMatrix<R>>,
    vectors: Vec<CVector<R>>,
    encoded: bool,
}

impl<R: Real> BellBasis<R> {
    pub fn new(d: usize, kind: BasisKind) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("basis dimension must be positive".into()));
        }
        let sigmas: Vec<CMatrix<R>> = match kind {
            BasisKind::Weyl => (0..d * d).map(|k| weyl(d, k / d, k % d)).collect(),
            BasisKind::QubitPauli => {
                if !d.is_power_of_two() {
                    return dim_err(format!("qubit Pauli basis needs a power of two, got {d}"));
                }
                let n = d.trailing_zeros() as usize;
                (0..d * d).map(|k| qubit_pauli(n, k)).collect()
            }
        };
        let w = ebit::<R>(d);
        let vectors = sigmas
            .iter()
            .map(|s| apply_on_wires(&w, &[d, d], s, &[0]).expect("dims agree"))
            .collect();
        Ok(Self {
            d,
            kind,
            side_dim: d,
            sigmas,
            vectors,
            encoded: false,
        })
    }

    pub fn weyl(d: usize) -> Self {
        Self::new(d, BasisKind::Weyl).expect("positive dimension")
    }

    /// Qubit Paulis for powers of two, Weyl operators otherwise.
    pub fn default_for(d: usize) -> Self {
        let kind = if d.is_power_of_two() {
            BasisKind::QubitPauli
        } else {
            BasisKind::Weyl
        };
        Self::new(d, kind).expect("positive dimension")
    }

    /// The basis carried into a code space by the isometry `v` (columns are
    /// logical basis states).
    pub fn encoded(&self, v: &CMatrix<R>) -> Result<Self> {
        if v.ncols() != self.d {
            return dim_err(format!(
                "isometry with {} columns for a {}-level basis",
                v.ncols(),
                self.d
            ));
        }
        let vv = kron(v, v);
        Ok(Self {
            d: self.d,
            kind: self.kind,
            side_dim: v.nrows(),
            sigmas: self.sigmas.clone(),
            vectors: self.vectors.iter().map(|x| &vv * x).collect(),
            encoded: true,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Dimension of each measured wire.
    pub fn side_dim(&self) -> usize {
        self.side_dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_encoded(&self) -> bool {
        self.encoded
    }

    pub fn sigma(&self, k: usize) -> &CMatrix<R> {
        &self.sigmas[k]
    }

    pub fn vector(&self, k: usize) -> &CVector<R> {
        &self.vectors[k]
    }

    pub fn projector(&self, k: usize) -> CMatrix<R> {
        let v = &self.vectors[k];
        v * v.adjoint()
    }

    /// Two-outcome coarse graining `{Π_0, I − Π_0}`: trivial versus
    /// non-trivial byproduct.
    pub fn binary_coarse_graining(&self) -> [CMatrix<R>; 2] {
        let p0 = self.projector(0);
        let n = self.side_dim * self.side_dim;
        let rest = identity::<R>(n) - &p0;
        [p0, rest]
    }
}
