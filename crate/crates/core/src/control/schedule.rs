//! Classical schedules and their line-oriented text form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::memory::description::{
    logical_lines, parse_error, parse_num, tokenize, Fields, KeyValue,
};
use crate::memory::MemoryUnit;
use crate::qkernel::gates;
use crate::scalar::Real;
use crate::tailed::InjectionMode;
use crate::uqt::ByproductStrategy;

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    /// Consume one copy of each program and store `|ω_{U_b U_a}⟩` at `dest`.
    Compose {
        first: u64,
        second: u64,
        strategy: ByproductStrategy,
        dest: u64,
    },
    /// Declare the input bitstring injected into the tails of `target`.
    Inject {
        target: u64,
        bits: Vec<bool>,
        mode: InjectionMode,
    },
    /// Consume a copy of `target`, inject and measure a Pauli-string observable.
    Readout {
        target: u64,
        observable: String,
    },
    Restore {
        address: u64,
        copies: usize,
    },
    /// Consume a copy of `target` and measure one tail in the `Z` basis.
    SampleTail {
        target: u64,
        tail: usize,
    },
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Compose {
                first,
                second,
                strategy,
                dest,
            } => write!(
                f,
                "compose a={first} b={second} strategy={} dest={dest}",
                strategy.name()
            ),
            Self::Inject { target, bits, mode } => {
                write!(f, "inject target={target} bits={}", bit_string(bits))?;
                if *mode == InjectionMode::Cascade {
                    write!(f, " mode=cascade")?;
                }
                Ok(())
            }
            Self::Readout { target, observable } => {
                write!(f, "readout target={target} observable={observable}")
            }
            Self::Restore { address, copies } => {
                write!(f, "restore addr={address} copies={copies}")
            }
            Self::SampleTail { target, tail } => {
                write!(f, "sample-tail target={target} tail={tail}")
            }
        }
    }
}

impl Instruction {
    /// Addresses whose copies this instruction consumes.
    pub fn consumes(&self) -> Vec<u64> {
        match self {
            Self::Compose { first, second, .. } => vec![*first, *second],
            Self::Readout { target, .. } | Self::SampleTail { target, .. } => vec![*target],
            Self::Inject { .. } | Self::Restore { .. } => Vec::new(),
        }
    }
}

/// Ordered instructions executed once per shot.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub instructions: Vec<Instruction>,
    pub shots: usize,
    pub seed: u64,
}

impl Schedule {
    pub fn new(instructions: Vec<Instruction>, shots: usize, seed: u64) -> Result<Self> {
        let s = Self {
            instructions,
            shots,
            seed,
        };
        s.check_shape()?;
        Ok(s)
    }

    pub fn empty(shots: usize, seed: u64) -> Self {
        Self {
            instructions: Vec::new(),
            shots,
            seed,
        }
    }

    /// Shape checks that do not need a memory unit.
    fn check_shape(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Argument("shots must be positive".into()));
        }
        let mut dests = BTreeSet::new();
        let mut readouts = 0;
        for (i, ins) in self.instructions.iter().enumerate() {
            let bad = |m: String| Error::Instruction {
                index: i,
                source: Box::new(Error::Validation(m)),
            };
            match ins {
                Instruction::Compose { dest, .. } if !dests.insert(*dest) => {
                    return Err(bad(format!("destination {dest} used twice")))
                }
                Instruction::Readout { observable, .. } => {
                    readouts += 1;
                    if readouts > 1 {
                        return Err(bad("at most one readout per shot".into()));
                    }
                    if gates::pauli_string::<f64>(observable).is_none() || observable.is_empty() {
                        return Err(bad(format!(
                            "observable {observable:?} is not a Pauli string"
                        )));
                    }
                }
                Instruction::Restore { copies: 0, .. } => {
                    return Err(bad("restore needs at least one copy".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks operands against the memory unit before execution.
    pub fn validate<R: Real>(&self, mem: &MemoryUnit<R>) -> Result<()> {
        self.check_shape()?;
        // program dimension per address, including destinations created on the way
        let mut dims: BTreeMap<u64, usize> = BTreeMap::new();
        for slot in mem.slots() {
            let d = slot
                .description()
                .map(|d| d.dim())
                .or_else(|| slot.peek().map(|p| p.d()));
            if let Some(d) = d {
                dims.insert(slot.address(), d);
            }
        }
        let mut injected: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, ins) in self.instructions.iter().enumerate() {
            let wrap = |e: Error| Error::Instruction {
                index: i,
                source: Box::new(e),
            };
            let known = |a: u64| -> Result<usize> {
                if let Some(&d) = dims.get(&a) {
                    Ok(d)
                } else if mem.contains(a) {
                    Err(Error::Validation(format!(
                        "slot {a} has no dimension information"
                    )))
                } else {
                    Err(Error::NotFound(a))
                }
            };
            match ins {
                Instruction::Compose {
                    first,
                    second,
                    dest,
                    ..
                } => {
                    let d1 = known(*first).map_err(wrap)?;
                    let d2 = known(*second).map_err(wrap)?;
                    if d1 != d2 {
                        return Err(wrap(Error::Dimension(format!(
                            "programs {first} and {second} have dimensions {d1} and {d2}"
                        ))));
                    }
                    if mem.contains(*dest) {
                        return Err(wrap(Error::Validation(format!(
                            "destination {dest} already exists"
                        ))));
                    }
                    dims.insert(*dest, d1);
                }
                Instruction::Inject { target, bits, .. } => {
                    let d = known(*target).map_err(wrap)?;
                    if 1usize << bits.len() != d {
                        return Err(wrap(Error::Dimension(format!(
                            "{} bits do not match program dimension {d}",
                            bits.len()
                        ))));
                    }
                    injected.insert(*target, bits.len());
                }
                Instruction::Readout { target, observable } => {
                    known(*target).map_err(wrap)?;
                    let n = injected.get(target).ok_or_else(|| {
                        wrap(Error::Validation(format!(
                            "readout of {target} without a prior inject"
                        )))
                    })?;
                    if observable.chars().count() != *n {
                        return Err(wrap(Error::Dimension(format!(
                            "observable {observable} does not act on {n} qubits"
                        ))));
                    }
                }
                Instruction::Restore { address, .. } => {
                    let slot = mem.slot(*address).map_err(wrap)?;
                    if slot.description().is_none() {
                        return Err(wrap(Error::NotRestorable(*address)));
                    }
                }
                Instruction::SampleTail { target, tail } => {
                    let d = known(*target).map_err(wrap)?;
                    if !d.is_power_of_two() || *tail >= d.trailing_zeros() as usize {
                        return Err(wrap(Error::Dimension(format!("tail {tail} out of range"))));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical text: a `QVNS1 shots=<n> seed=<s>` header and one
    /// instruction per line.
    pub fn serialize(&self) -> String {
        let mut out = format!("QVNS1 shots={} seed={}\n", self.shots, self.seed);
        for ins in &self.instructions {
            out.push_str(&ins.to_string());
            out.push('\n');
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = logical_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_error(1, 1, "empty schedule"))?;
        let toks = tokenize(header);
        if toks.first().map(|t| t.text) != Some("QVNS1") {
            return Err(parse_error(
                hl,
                toks.first().map_or(1, |t| t.column),
                "expected QVNS1 header",
            ));
        }
        let mut f = Fields::new(hl, &toks[1..])?;
        let shots = num(&f.take("shots")?, hl)?;
        let seed = num(&f.take("seed")?, hl)?;
        f.finish()?;
        let mut instructions = Vec::new();
        for (ln, line) in lines {
            instructions.push(parse_instruction(ln, line)?);
        }
        Self::new(instructions, shots, seed).map_err(|e| match e {
            Error::Argument(m) => parse_error(hl, 1, m),
            other => other,
        })
    }
}

fn num<T: std::str::FromStr>(kv: &KeyValue<'_>, ln: usize) -> Result<T> {
    parse_num(ln, &kv.token, kv.value)
}

fn parse_instruction(ln: usize, line: &str) -> Result<Instruction> {
    let toks = tokenize(line);
    let op = toks[0];
    let mut f = Fields::new(ln, &toks[1..])?;
    let ins = match op.text {
        "compose" => {
            let first = num(&f.take("a")?, ln)?;
            let second = num(&f.take("b")?, ln)?;
            let s = f.take("strategy")?;
            let strategy = ByproductStrategy::parse(s.value).ok_or_else(|| {
                parse_error(
                    ln,
                    s.token.column,
                    format!("unknown strategy {:?}", s.value),
                )
            })?;
            let dest = num(&f.take("dest")?, ln)?;
            Instruction::Compose {
                first,
                second,
                strategy,
                dest,
            }
        }
        "inject" => {
            let target = num(&f.take("target")?, ln)?;
            let b = f.take("bits")?;
            let bits = b
                .value
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(parse_error(ln, b.token.column, format!("bad bit {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if bits.is_empty() {
                return Err(parse_error(ln, b.token.column, "empty bitstring"));
            }
            let mode = if f.peek_key() == Some("mode") {
                let m = f.take("mode")?;
                match m.value {
                    "monolithic" => InjectionMode::Monolithic,
                    "cascade" => InjectionMode::Cascade,
                    v => {
                        return Err(parse_error(
                            ln,
                            m.token.column,
                            format!("unknown injection mode {v:?}"),
                        ))
                    }
                }
            } else {
                InjectionMode::Monolithic
            };
            Instruction::Inject { target, bits, mode }
        }
        "readout" => {
            let target = num(&f.take("target")?, ln)?;
            let o = f.take("observable")?;
            if o.value.is_empty() || gates::pauli_string::<f64>(o.value).is_none() {
                return Err(parse_error(
                    ln,
                    o.token.column,
                    format!("observable {:?} is not a Pauli string", o.value),
                ));
            }
            Instruction::Readout {
                target,
                observable: o.value.to_string(),
            }
        }
        "restore" => Instruction::Restore {
            address: num(&f.take("addr")?, ln)?,
            copies: num(&f.take("copies")?, ln)?,
        },
        "sample-tail" => Instruction::SampleTail {
            target: num(&f.take("target")?, ln)?,
            tail: num(&f.take("tail")?, ln)?,
        },
        other => {
            return Err(parse_error(
                ln,
                op.column,
                format!("unknown instruction {other:?}"),
            ))
        }
    };
    f.finish()?;
    Ok(ins)
}
