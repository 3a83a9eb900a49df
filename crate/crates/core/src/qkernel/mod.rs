//! Dense complex linear algebra and exact quantum-state semantics.

pub mod gates;
pub mod linalg;
pub mod measure;
pub mod random;
pub mod rng;
pub mod state;

pub use linalg::{eig_unitary, kron, UnitaryEigen};
pub use measure::{measure, Measurable, Outcome};
pub use rng::RngStream;
pub use state::{
    apply_channel, expectation, expectation_pure, partial_trace, purity, DensityOperator,
    KrausChannel, Observable, PureState, UnitaryOp,
};
