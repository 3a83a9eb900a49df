//! The memory unit: addressed slots of identical program copies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::memory::description::{
    logical_lines, parse_error, parse_num, tokenize, Fields, ProgramDescription,
};
use crate::scalar::Real;
use crate::uqt::program::StoredProgram;

/// Builds the stored program of a description, with its classical data
/// (correction table, symmetric factors) computed eagerly.
pub fn synthesize<R: Real>(desc: &ProgramDescription) -> Result<StoredProgram<R>> {
    let p = StoredProgram::from_description(desc.clone())?;
    p.prepare()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Program,
    /// A state preparation circuit; the preparation is chosen by the caller.
    Data,
}

impl SlotKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Program => "program",
            Self::Data => "data",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "program" => Some(Self::Program),
            "data" => Some(Self::Data),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MemorySlot<R: Real> {
    address: u64,
    description: Option<ProgramDescription>,
    copies: Vec<StoredProgram<R>>,
    kind: SlotKind,
}

impl<R: Real> MemorySlot<R> {
    pub fn address(&self) -> u64 {
        self.address
    }

    pub fn description(&self) -> Option<&ProgramDescription> {
        self.description.as_ref()
    }

    pub fn copies(&self) -> usize {
        self.copies.len()
    }

    pub fn kind(&self) -> SlotKind {
        self.kind
    }

    /// Read-only view of a remaining copy.
    pub fn peek(&self) -> Option<&StoredProgram<R>> {
        self.copies.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuditOp {
    Store,
    /// A copy produced elsewhere (e.g. by composition) and placed in a slot.
    Deposit,
    Fetch,
    Restore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditRecord {
    pub seq: u64,
    pub op: AuditOp,
    pub address: u64,
    pub count: usize,
}

/// Single-owner store of program copies. Mutations go through `&mut self`,
/// so sharing requires an external owner.
#[derive(Debug, Clone)]
pub struct MemoryUnit<R: Real> {
    slots: BTreeMap<u64, MemorySlot<R>>,
    audit: Vec<AuditRecord>,
    next_address: u64,
}

impl<R: Real> Default for MemoryUnit<R> {
    fn default() -> Self {
        Self {
            slots: BTreeMap::new(),
            audit: Vec::new(),
            next_address: 0,
        }
    }
}

impl<R: Real> MemoryUnit<R> {
    pub fn new() -> Self {
        Self::default()
    }

    fn log(&mut self, op: AuditOp, address: u64, count: usize) {
        let seq = self.audit.len() as u64;
        self.audit.push(AuditRecord {
            seq,
            op,
            address,
            count,
        });
    }

    fn insert(
        &mut self,
        address: u64,
        description: Option<ProgramDescription>,
        copies: Vec<StoredProgram<R>>,
        kind: SlotKind,
    ) -> Result<u64> {
        if self.slots.contains_key(&address) {
            return Err(Error::Argument(format!(
                "address {address} is already in use"
            )));
        }
        let n = copies.len();
        self.slots.insert(
            address,
            MemorySlot {
                address,
                description,
                copies,
                kind,
            },
        );
        self.next_address = self.next_address.max(address + 1);
        self.log(AuditOp::Store, address, n);
        Ok(address)
    }

    fn synthesized(desc: &ProgramDescription, copies: usize) -> Result<Vec<StoredProgram<R>>> {
        if copies == 0 {
            return Err(Error::Argument("at least one copy must be stored".into()));
        }
        let p = synthesize(desc)?;
        Ok(vec![p; copies])
    }

    /// Stores `copies` synthesized instances at a fresh address.
    pub fn store(&mut self, desc: &ProgramDescription, copies: usize) -> Result<u64> {
        self.store_at(self.next_address, desc, copies, SlotKind::Program)
    }

    pub fn store_data(&mut self, preparation: &ProgramDescription, copies: usize) -> Result<u64> {
        self.store_at(self.next_address, preparation, copies, SlotKind::Data)
    }

    pub fn store_at(
        &mut self,
        address: u64,
        desc: &ProgramDescription,
        copies: usize,
        kind: SlotKind,
    ) -> Result<u64> {
        let programs = Self::synthesized(desc, copies)?;
        self.insert(address, Some(desc.clone()), programs, kind)
    }

    /// Stores copies captured without a classical description; such a slot
    /// cannot be restored once exhausted.
    pub fn store_captured(
        &mut self,
        program: StoredProgram<R>,
        copies: usize,
        kind: SlotKind,
    ) -> Result<u64> {
        if copies == 0 {
            return Err(Error::Argument("at least one copy must be stored".into()));
        }
        let desc = program.description().cloned();
        self.insert(self.next_address, desc, vec![program; copies], kind)
    }

    /// Places one externally produced copy at `address`, creating the slot
    /// if needed.
    pub fn deposit(&mut self, address: u64, program: StoredProgram<R>) -> Result<usize> {
        let slot = self.slots.entry(address).or_insert_with(|| MemorySlot {
            address,
            description: program.description().cloned(),
            copies: Vec::new(),
            kind: SlotKind::Program,
        });
        if let Some(first) = slot.copies.first() {
            if first.d() != program.d() {
                return Err(Error::Dimension(format!(
                    "slot {address} holds dimension {}, deposit has {}",
                    first.d(),
                    program.d()
                )));
            }
        }
        slot.copies.push(program);
        let total = slot.copies.len();
        self.next_address = self.next_address.max(address + 1);
        self.log(AuditOp::Deposit, address, 1);
        Ok(total)
    }

    /// Removes and returns one copy.
    pub fn fetch_consume(&mut self, address: u64) -> Result<StoredProgram<R>> {
        let slot = self
            .slots
            .get_mut(&address)
            .ok_or(Error::NotFound(address))?;
        let p = slot.copies.pop().ok_or(Error::OutOfCopies(address))?;
        self.log(AuditOp::Fetch, address, 1);
        Ok(p)
    }

    /// Re-synthesizes `copies` instances from the slot's description;
    /// returns the new total.
    pub fn restore(&mut self, address: u64, copies: usize) -> Result<usize> {
        let slot = self.slots.get(&address).ok_or(Error::NotFound(address))?;
        let desc = slot
            .description
            .as_ref()
            .ok_or(Error::NotRestorable(address))?;
        let fresh = Self::synthesized(desc, copies)?;
        let slot = self.slots.get_mut(&address).expect("checked above");
        slot.copies.extend(fresh);
        let total = slot.copies.len();
        self.log(AuditOp::Restore, address, copies);
        Ok(total)
    }

    pub fn slot(&self, address: u64) -> Result<&MemorySlot<R>> {
        self.slots.get(&address).ok_or(Error::NotFound(address))
    }

    pub fn slots(&self) -> impl Iterator<Item = &MemorySlot<R>> {
        self.slots.values()
    }

    pub fn contains(&self, address: u64) -> bool {
        self.slots.contains_key(&address)
    }

    pub fn copies(&self, address: u64) -> Result<usize> {
        Ok(self.slot(address)?.copies())
    }

    /// Copy count per address.
    pub fn inventory(&self) -> BTreeMap<u64, usize> {
        self.slots.iter().map(|(&a, s)| (a, s.copies())).collect()
    }

    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.audit
    }

    /// Copies implied by the audit log: stores + deposits + restores − fetches.
    pub fn audited_copies(&self, address: u64) -> i64 {
        self.audit
            .iter()
            .filter(|r| r.address == address)
            .map(|r| match r.op {
                AuditOp::Fetch => -(r.count as i64),
                _ => r.count as i64,
            })
            .sum()
    }

    /// Checks the audit log against the current copy counts.
    pub fn verify_audit(&self) -> Result<()> {
        for (&a, s) in &self.slots {
            let want = self.audited_copies(a);
            if want != s.copies() as i64 {
                return Err(Error::Validation(format!(
                    "slot {a}: audit implies {want} copies, found {}",
                    s.copies()
                )));
            }
        }
        Ok(())
    }

    /// Builds a memory from a manifest (see [`parse_manifest`]).
    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut mem = Self::new();
        for e in parse_manifest(text)? {
            mem.store_at(e.address, &e.description, e.copies, e.kind)?;
        }
        Ok(mem)
    }
}

/// One slot of a memory manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub address: u64,
    pub kind: SlotKind,
    pub copies: usize,
    pub description: ProgramDescription,
}

/// Serializes slot descriptions as a manifest: a `QVNM1` header, then per
/// slot a `slot addr=<a> kind=<k> copies=<c>` line followed by the `QVN1`
/// document of its description.
pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::from("QVNM1\n");
    for e in entries {
        out.push_str(&format!(
            "slot addr={} kind={} copies={}\n",
            e.address,
            e.kind.name(),
            e.copies
        ));
        out.push_str(&e.description.serialize());
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut lines = logical_lines(text).peekable();
    match lines.next() {
        Some((_, l)) if l.trim() == "QVNM1" => {}
        Some((ln, _)) => return Err(parse_error(ln, 1, "expected QVNM1 header")),
        None => return Err(parse_error(1, 1, "empty manifest")),
    }
    let mut entries = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let toks = tokenize(line);
        if toks.first().map(|t| t.text) != Some("slot") {
            return Err(parse_error(
                ln,
                toks.first().map_or(1, |t| t.column),
                "expected slot line",
            ));
        }
        let mut f = Fields::new(ln, &toks[1..])?;
        let a = f.take("addr")?;
        let address: u64 = parse_num(ln, &a.token, a.value)?;
        let k = f.take("kind")?;
        let kind = SlotKind::parse(k.value).ok_or_else(|| {
            parse_error(
                ln,
                k.token.column,
                format!("unknown slot kind {:?}", k.value),
            )
        })?;
        let c = f.take("copies")?;
        let copies: usize = parse_num(ln, &c.token, c.value)?;
        f.finish()?;
        // the description runs until the next slot line; keep original line numbers
        let mut doc = String::new();
        let mut first_line = None;
        while let Some(&(dl, body)) = lines.peek() {
            if tokenize(body).first().map(|t| t.text) == Some("slot") {
                break;
            }
            first_line.get_or_insert(dl);
            doc.push_str(body);
            doc.push('\n');
            lines.next();
        }
        let start = first_line
            .ok_or_else(|| parse_error(ln, 1, format!("slot {address} has no description")))?;
        let description = ProgramDescription::deserialize(&doc).map_err(|e| match e {
            Error::Parse {
                line,
                column,
                message,
            } => parse_error(start + line - 1, column, message),
            other => other,
        })?;
        entries.push(ManifestEntry {
            address,
            kind,
            copies,
            description,
        });
    }
    Ok(entries)
}
