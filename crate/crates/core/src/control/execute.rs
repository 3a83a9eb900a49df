//! Shot-by-shot execution of schedules against a memory unit.
//!
//! Execution has two passes. The first walks the shots in order and applies
//! every memory mutation and composition. It owns the memory unit and uses
//! stream `2·shot`. The second performs injection, readout and tail
//! measurements for all shots in parallel, on stream `2·shot + 1`. Results
//! therefore do not depend on the thread count.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::memory::MemoryUnit;
use crate::qkernel::gates;
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::Observable;
use crate::scalar::Real;
use crate::tailed::{
    estimate, sample_tail_z, simulate, Endpoint, Estimate, Executor, InjectionSpec, ReadoutSpec,
    RunRecord, TailedCircuit,
};
use crate::uqt::compose;
use crate::uqt::program::StoredProgram;

use super::schedule::{Instruction, Schedule};

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Composed {
        index: usize,
        dest: u64,
        outcomes: Vec<usize>,
        rounds: usize,
    },
    Restored {
        index: usize,
        address: u64,
        total: usize,
    },
    Readout {
        index: usize,
        record: RunRecord,
    },
    Tail {
        index: usize,
        target: u64,
        tail: usize,
        bit: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub shot: usize,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone)]
pub struct ExecutionReport {
    pub shots: Vec<ShotRecord>,
    pub estimate: Option<Estimate>,
    /// Why no estimate was produced despite a readout instruction.
    pub estimate_error: Option<String>,
    pub inventory: BTreeMap<u64, usize>,
}

impl ExecutionReport {
    pub fn readout_records(&self) -> impl Iterator<Item = &RunRecord> {
        self.shots.iter().flat_map(|s| {
            s.events.iter().filter_map(|e| match e {
                Event::Readout { record, .. } => Some(record),
                _ => None,
            })
        })
    }
}

enum Pending<R: Real> {
    Readout {
        index: usize,
        program: StoredProgram<R>,
        injection: InjectionSpec,
        observable: String,
    },
    Tail {
        index: usize,
        target: u64,
        program: StoredProgram<R>,
        tail: usize,
    },
}

fn at(index: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Instruction {
        index,
        source: Box::new(e),
    }
}

fn program_digest<R: Real>(p: &StoredProgram<R>) -> Vec<u64> {
    p.unitary()
        .matrix()
        .iter()
        .flat_map(|z| [z.re.as_f64().to_bits(), z.im.as_f64().to_bits()])
        .collect()
}

fn readout_executor<R: Real>(
    program: &StoredProgram<R>,
    injection: &InjectionSpec,
    observable: &str,
) -> Result<Executor<R>> {
    let n = injection.bits.len();
    let o = gates::pauli_string::<R>(observable).ok_or_else(|| {
        Error::Argument(format!("observable {observable:?} is not a Pauli string"))
    })?;
    let mut c = TailedCircuit::program(program.unitary().clone(), 2)?;
    c.set_injection(injection.clone())?;
    c.set_readout(ReadoutSpec::on_heads(Observable::new(o)?, n))?;
    Executor::new(&c)
}

/// Runs `schedule` against `mem`. On error the memory is left untouched.
pub fn execute<R: Real>(mem: &mut MemoryUnit<R>, schedule: &Schedule) -> Result<ExecutionReport> {
    schedule.validate(mem)?;
    if schedule.instructions.is_empty() {
        return Ok(ExecutionReport {
            shots: Vec::new(),
            estimate: None,
            estimate_error: None,
            inventory: mem.inventory(),
        });
    }
    let mut work = mem.clone();
    let mut shots = Vec::with_capacity(schedule.shots);
    let mut pending = Vec::with_capacity(schedule.shots);
    for shot in 0..schedule.shots {
        let mut rng = RngStream::new(schedule.seed, 2 * shot as u64);
        let mut events = Vec::new();
        let mut todo = Vec::new();
        let mut injections: HashMap<u64, InjectionSpec> = HashMap::new();
        for (index, ins) in schedule.instructions.iter().enumerate() {
            let wrap = at(index);
            match ins {
                Instruction::Compose {
                    first,
                    second,
                    strategy,
                    dest,
                } => {
                    let p1 = work.fetch_consume(*first).map_err(&wrap)?;
                    let p2 = work.fetch_consume(*second).map_err(&wrap)?;
                    let c = compose(&p1, &p2, *strategy, &mut rng).map_err(&wrap)?;
                    work.deposit(*dest, c.program).map_err(&wrap)?;
                    events.push(Event::Composed {
                        index,
                        dest: *dest,
                        outcomes: c.outcomes,
                        rounds: c.shots_used,
                    });
                }
                Instruction::Inject { target, bits, mode } => {
                    let spec = InjectionSpec::with_bits(bits.len(), bits.clone()).mode(*mode);
                    injections.insert(*target, spec);
                }
                Instruction::Readout { target, observable } => {
                    let injection = injections.get(target).cloned().ok_or_else(|| {
                        wrap(Error::Validation(format!(
                            "no injection declared for {target}"
                        )))
                    })?;
                    let program = work.fetch_consume(*target).map_err(&wrap)?;
                    todo.push(Pending::Readout {
                        index,
                        program,
                        injection,
                        observable: observable.clone(),
                    });
                }
                Instruction::Restore { address, copies } => {
                    let total = work.restore(*address, *copies).map_err(&wrap)?;
                    events.push(Event::Restored {
                        index,
                        address: *address,
                        total,
                    });
                }
                Instruction::SampleTail { target, tail } => {
                    let program = work.fetch_consume(*target).map_err(&wrap)?;
                    todo.push(Pending::Tail {
                        index,
                        target: *target,
                        program,
                        tail: *tail,
                    });
                }
            }
        }
        shots.push(ShotRecord { shot, events });
        pending.push(todo);
    }

    // identical copies share one executor
    let mut executors: HashMap<(usize, Vec<u64>), Executor<R>> = HashMap::new();
    for todo in &pending {
        for p in todo {
            if let Pending::Readout {
                index,
                program,
                injection,
                observable,
            } = p
            {
                let key = (*index, program_digest(program));
                if let std::collections::hash_map::Entry::Vacant(e) = executors.entry(key) {
                    let ex =
                        readout_executor(program, injection, observable).map_err(at(*index))?;
                    e.insert(ex);
                }
            }
        }
    }

    let measured: Vec<Vec<Event>> = pending
        .into_par_iter()
        .enumerate()
        .map(|(shot, todo)| {
            let mut rng = RngStream::new(schedule.seed, 2 * shot as u64 + 1);
            todo.into_iter()
                .map(|p| match p {
                    Pending::Readout { index, program, .. } => {
                        let ex = &executors[&(index, program_digest(&program))];
                        let record = ex.shot(shot, &mut rng).map_err(at(index))?;
                        Ok(Event::Readout { index, record })
                    }
                    Pending::Tail {
                        index,
                        target,
                        program,
                        tail,
                    } => {
                        let c = TailedCircuit::program(program.unitary().clone(), 2)
                            .map_err(at(index))?;
                        let state = simulate(&c).map_err(at(index))?;
                        let wire = c.wire(Endpoint::Tail(tail)).map_err(at(index))?;
                        let s = sample_tail_z(&state, wire, &mut rng).map_err(at(index))?;
                        Ok(Event::Tail {
                            index,
                            target,
                            tail,
                            bit: s.bit,
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for (rec, extra) in shots.iter_mut().zip(measured) {
        rec.events.extend(extra);
        rec.events.sort_by_key(event_index);
    }

    let mut report = ExecutionReport {
        shots,
        estimate: None,
        estimate_error: None,
        inventory: work.inventory(),
    };
    let readout = schedule.instructions.iter().find_map(|i| match i {
        Instruction::Readout { observable, .. } => Some(observable),
        _ => None,
    });
    if let Some(obs) = readout {
        let trace_o = if obs.chars().all(|c| c == 'I') {
            2f64.powi(obs.len() as i32)
        } else {
            0.0
        };
        let records: Vec<RunRecord> = report.readout_records().cloned().collect();
        match estimate(&records, trace_o, obs.len()) {
            Ok(e) => report.estimate = Some(e),
            Err(e) => report.estimate_error = Some(e.to_string()),
        }
    }
    *mem = work;
    Ok(report)
}

fn event_index(e: &Event) -> usize {
    match e {
        Event::Composed { index, .. }
        | Event::Restored { index, .. }
        | Event::Readout { index, .. }
        | Event::Tail { index, .. } => *index,
    }
}
