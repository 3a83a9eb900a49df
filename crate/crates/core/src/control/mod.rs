//! Classical control: schedules driving composition, injection and readout,
//! plus the controlled-unknown-gate primitive.

pub mod controlled;
pub mod execute;
pub mod schedule;

pub use controlled::{
    controlled_unknown, controlled_unknown_tol, ideal_controlled, ControlledUnknown,
};
pub use execute::{execute, Event, ExecutionReport, ShotRecord};
pub use schedule::{Instruction, Schedule};
