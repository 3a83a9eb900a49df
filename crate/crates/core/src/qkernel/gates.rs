//! Standard gate matrices.

use crate::qkernel::linalg::{identity, kron};
use crate::scalar::{c, CMatrix, Real};

fn m2<R: Real>(e: [(f64, f64); 4]) -> CMatrix<R> {
    CMatrix::from_row_slice(2, 2, &e.map(|(a, b)| c(a, b)))
}

pub fn x<R: Real>() -> CMatrix<R> {
    m2([(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
}

pub fn y<R: Real>() -> CMatrix<R> {
    m2([(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
}

pub fn z<R: Real>() -> CMatrix<R> {
    m2([(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
}

pub fn h<R: Real>() -> CMatrix<R> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    m2([(s, 0.), (s, 0.), (s, 0.), (-s, 0.)])
}

pub fn s<R: Real>() -> CMatrix<R> {
    m2([(1., 0.), (0., 0.), (0., 0.), (0., 1.)])
}

pub fn t<R: Real>() -> CMatrix<R> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    m2([(1., 0.), (0., 0.), (0., 0.), (s, s)])
}

pub fn tdg<R: Real>() -> CMatrix<R> {
    t::<R>().adjoint()
}

fn p0<R: Real>() -> CMatrix<R> {
    m2([(1., 0.), (0., 0.), (0., 0.), (0., 0.)])
}

fn p1<R: Real>() -> CMatrix<R> {
    m2([(0., 0.), (0., 0.), (0., 0.), (1., 0.)])
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U` with the control as the most significant qubit.
pub fn controlled<R: Real>(u: &CMatrix<R>) -> CMatrix<R> {
    kron(&p0(), &identity(u.nrows())) + kron(&p1(), u)
}

pub fn cx<R: Real>() -> CMatrix<R> {
    controlled(&x())
}

pub fn cz<R: Real>() -> CMatrix<R> {
    controlled(&z())
}

pub fn ccx<R: Real>() -> CMatrix<R> {
    controlled(&cx())
}

/// `n`-fold Toffoli on `n + 1` qubits: the last qubit flips iff all controls are 1.
pub fn mcx<R: Real>(controls: usize) -> CMatrix<R> {
    let dim = 1usize << (controls + 1);
    let mut m = identity(dim);
    let a = dim - 2;
    let b = dim - 1;
    m[(a, a)] = c(0., 0.);
    m[(b, b)] = c(0., 0.);
    m[(a, b)] = c(1., 0.);
    m[(b, a)] = c(1., 0.);
    m
}

/// Swap of two wires of dimension `d`.
pub fn swap<R: Real>(d: usize) -> CMatrix<R> {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = c(1., 0.);
        }
    }
    m
}

/// Qubit-controlled swap of two `d`-dimensional wires.
pub fn cswap<R: Real>(d: usize) -> CMatrix<R> {
    controlled(&swap(d))
}

/// Single-qubit Pauli from its letter.
pub fn pauli<R: Real>(letter: char) -> Option<CMatrix<R>> {
    match letter.to_ascii_uppercase() {
        'I' => Some(identity(2)),
        'X' => Some(x()),
        'Y' => Some(y()),
        'Z' => Some(z()),
        _ => None,
    }
}

/// Tensor product of single-qubit Paulis, e.g. `"XZI"`.
pub fn pauli_string<R: Real>(s: &str) -> Option<CMatrix<R>> {
    let mut acc = identity(1);
    for ch in s.chars() {
        acc = kron(&acc, &pauli(ch)?);
    }
    if s.is_empty() {
        None
    } else {
        Some(acc)
    }
}
