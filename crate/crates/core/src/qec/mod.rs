//! Small-code error correction: Knill–Laflamme checks, recovery maps,
//! logical ebits and composition of encoded programs.

pub mod code;
pub mod kl;
pub mod logical;

pub use code::{Code, CodeFile, ErrorSet};
pub use kl::{
    build_recovery, check_detection, check_kl, check_kl_tol, error_channel, DetectionReport,
    KlReport, Recovery,
};
pub use logical::{
    logical_compose, logical_ebit, LogicalComposition, LogicalProgram, MAX_COMPOSITION_QUBITS,
};
