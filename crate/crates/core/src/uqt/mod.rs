//! Universal quantum gate teleportation: composing stored programs through
//! Bell measurements, with three ways of handling the byproduct.

pub mod basis;
pub mod comb;
pub mod compose;
pub mod program;

pub use basis::{qubit_pauli, weyl, BasisKind, BellBasis};
pub use comb::{realise_comb, RealisedComb};
pub use compose::{
    bell_measure_pair, bell_probabilities, compose, composition_unitary, ByproductStrategy,
    Composition, CompositionUnitary, PairOutcome,
};
pub use program::{symmetric_decompose, StoredProgram, SymmetricFactors};
