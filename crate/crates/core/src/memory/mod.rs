//! Addressed storage of stored programs with consume-on-use and restoration
//! from classical descriptions.

pub mod description;
pub mod unit;

pub use description::{
    CustomGate, DescriptionCipher, GateRecord, GateTag, PlainText, ProgramDescription,
};
pub use unit::{
    parse_manifest, synthesize, write_manifest, AuditOp, AuditRecord, ManifestEntry, MemorySlot,
    MemoryUnit, SlotKind,
};
