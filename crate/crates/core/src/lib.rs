//! Dense, exact simulation of a stored-program quantum architecture:
//! Choi-state programs, gate-teleportation composition, tailed circuits,
//! combs and small error-correcting codes.
//!
//! Numerical code is generic over [`Real`] (`f64` or `f32`); the aliases at
//! the bottom of this file fix the scalar for everyday use.

pub mod control;
pub mod duality;
pub mod error;
pub mod memory;
pub mod qec;
pub mod qkernel;
pub mod scalar;
pub mod tailed;
pub mod uqt;

pub use error::{Error, Result};
pub use qkernel::RngStream;
pub use scalar::{CMatrix, CVector, Real, C};

pub type CMatrix64 = CMatrix<f64>;
pub type PureState64 = qkernel::PureState<f64>;
pub type DensityOperator64 = qkernel::DensityOperator<f64>;
pub type UnitaryOp64 = qkernel::UnitaryOp<f64>;
pub type KrausChannel64 = qkernel::KrausChannel<f64>;
pub type Observable64 = qkernel::Observable<f64>;

pub type PureState32 = qkernel::PureState<f32>;
pub type DensityOperator32 = qkernel::DensityOperator<f32>;
pub type UnitaryOp32 = qkernel::UnitaryOp<f32>;
pub type KrausChannel32 = qkernel::KrausChannel<f32>;

pub type ChoiState64 = duality::ChoiState<f64>;
pub type Superchannel64 = duality::Superchannel<f64>;
pub type Comb64 = duality::Comb<f64>;
pub type ChoiState32 = duality::ChoiState<f32>;
pub type StoredProgram64 = uqt::StoredProgram<f64>;
pub type StoredProgram32 = uqt::StoredProgram<f32>;
pub type TailedCircuit64 = tailed::TailedCircuit<f64>;
pub type TopoDiagram64 = tailed::TopoDiagram<f64>;
pub type MemoryUnit64 = memory::MemoryUnit<f64>;
pub type Code64 = qec::Code<f64>;
pub type ErrorSet64 = qec::ErrorSet<f64>;
pub type LogicalProgram64 = qec::LogicalProgram<f64>;
