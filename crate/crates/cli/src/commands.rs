use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use qvn_core::control::{execute, Event, Instruction, Schedule};
use qvn_core::memory::{AuditOp, MemoryUnit, ProgramDescription};
use qvn_core::qec::{check_detection, check_kl_tol, CodeFile};
use qvn_core::tailed::{eval_topological, parse_diagram, BranchStats, TopoValue};
use qvn_core::uqt::{compose, ByproductStrategy};
use qvn_core::{CMatrix, RngStream, C};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn complex(z: C<f64>) -> Value {
    json!([z.re, z.im])
}

fn matrix(m: &CMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

fn stats(s: &BranchStats) -> Value {
    json!({ "count": s.count, "mean": s.mean, "variance": s.variance })
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub schedule: PathBuf,
    pub memory: PathBuf,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub records: bool,
}

/// Executes a schedule against a memory manifest.
pub fn cmd_run(cfg: &RunConfig) -> Result<Value> {
    let mut schedule = Schedule::deserialize(&read(&cfg.schedule)?)
        .map_err(|e| CliError::in_file(&cfg.schedule, e))?;
    let mut mem = MemoryUnit::<f64>::from_manifest(&read(&cfg.memory)?)
        .map_err(|e| CliError::in_file(&cfg.memory, e))?;
    if let Some(s) = cfg.shots {
        if s == 0 {
            return Err(CliError::usage("--shots must be at least 1"));
        }
        schedule.shots = s;
    }
    if let Some(s) = cfg.seed {
        schedule.seed = s;
    }
    let audit_start = mem.audit_log().len();
    let report = execute(&mut mem, &schedule)?;

    let mut per_instruction: Vec<Map<String, Value>> = schedule
        .instructions
        .iter()
        .enumerate()
        .map(|(i, ins)| {
            let mut m = Map::new();
            m.insert("index".into(), json!(i));
            m.insert("instruction".into(), json!(ins.to_string()));
            m
        })
        .collect();
    let mut outcome_counts: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut rounds: BTreeMap<usize, usize> = BTreeMap::new();
    let mut branch_counts: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    let mut values: BTreeMap<usize, BTreeMap<String, usize>> = BTreeMap::new();
    let mut bits: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    let mut restored: BTreeMap<usize, usize> = BTreeMap::new();
    for shot in &report.shots {
        for ev in &shot.events {
            match ev {
                Event::Composed {
                    index,
                    outcomes,
                    rounds: r,
                    ..
                } => {
                    for k in outcomes {
                        *outcome_counts
                            .entry(*index)
                            .or_default()
                            .entry(*k)
                            .or_default() += 1;
                    }
                    *rounds.entry(*index).or_default() += r;
                }
                Event::Readout { index, record } => {
                    let b = usize::from(record.branch == qvn_core::tailed::Branch::P1);
                    branch_counts.entry(*index).or_default()[b] += 1;
                    *values
                        .entry(*index)
                        .or_default()
                        .entry(format!("{}", record.value))
                        .or_default() += 1;
                }
                Event::Tail { index, bit, .. } => bits.entry(*index).or_default()[*bit] += 1,
                Event::Restored { index, .. } => {
                    if let Instruction::Restore { copies, .. } = schedule.instructions[*index] {
                        *restored.entry(*index).or_default() += copies;
                    }
                }
            }
        }
    }
    for (i, m) in per_instruction.iter_mut().enumerate() {
        match &schedule.instructions[i] {
            Instruction::Compose { .. } => {
                let counts: BTreeMap<String, usize> = outcome_counts
                    .remove(&i)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(k, c)| (k.to_string(), c))
                    .collect();
                let total = rounds.get(&i).copied().unwrap_or(0);
                m.insert("outcome_counts".into(), json!(counts));
                m.insert("rounds_total".into(), json!(total));
                m.insert(
                    "rounds_mean".into(),
                    json!(total as f64 / report.shots.len().max(1) as f64),
                );
            }
            Instruction::Readout { .. } => {
                let [p0, p1] = branch_counts.get(&i).copied().unwrap_or_default();
                m.insert("branch_counts".into(), json!({ "P0": p0, "P1": p1 }));
                m.insert(
                    "value_counts".into(),
                    json!(values.remove(&i).unwrap_or_default()),
                );
            }
            Instruction::SampleTail { .. } => {
                m.insert(
                    "bit_counts".into(),
                    json!(bits.get(&i).copied().unwrap_or_default()),
                );
            }
            Instruction::Restore { .. } => {
                m.insert(
                    "copies_restored".into(),
                    json!(restored.get(&i).copied().unwrap_or(0)),
                );
            }
            Instruction::Inject { .. } => {}
        }
    }

    let mut audit: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &mem.audit_log()[audit_start..] {
        let key = match r.op {
            AuditOp::Store => "stores",
            AuditOp::Deposit => "deposits",
            AuditOp::Fetch => "fetches",
            AuditOp::Restore => "restores",
        };
        *audit.entry(key).or_default() += r.count;
    }
    mem.verify_audit()?;

    let estimate = report.estimate.as_ref().map_or(Value::Null, |e| {
        json!({
            "value": e.value,
            "std_error": e.std_error,
            "shots": e.shots,
            "p1": stats(&e.p1),
            "p0": stats(&e.p0),
        })
    });
    let inventory: BTreeMap<String, usize> = report
        .inventory
        .iter()
        .map(|(a, c)| (a.to_string(), *c))
        .collect();
    let mut out = json!({
        "command": "run",
        "shots": schedule.shots,
        "seed": schedule.seed,
        "instructions": per_instruction,
        "estimate": estimate,
        "estimate_error": report.estimate_error,
        "inventory": inventory,
        "audit": audit,
    });
    if cfg.records {
        let shots: Vec<Value> = report
            .shots
            .iter()
            .map(|s| {
                let events: Vec<Value> = s
                    .events
                    .iter()
                    .map(|e| match e {
                        Event::Composed {
                            index,
                            dest,
                            outcomes,
                            rounds,
                        } => json!({ "index": index, "kind": "compose", "dest": dest, "outcomes": outcomes, "rounds": rounds }),
                        Event::Restored { index, address, total } => {
                            json!({ "index": index, "kind": "restore", "address": address, "total": total })
                        }
                        Event::Readout { index, record } => json!({
                            "index": index,
                            "kind": "readout",
                            "branch": record.branch.name(),
                            "value": record.value,
                        }),
                        Event::Tail { index, target, tail, bit } => {
                            json!({ "index": index, "kind": "sample-tail", "target": target, "tail": tail, "bit": bit })
                        }
                    })
                    .collect();
                json!({ "shot": s.shot, "events": events })
            })
            .collect();
        out["records"] = Value::Array(shots);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ComposeConfig {
    pub first: PathBuf,
    pub second: PathBuf,
    pub strategies: Vec<ByproductStrategy>,
    pub repeats: usize,
    pub seed: u64,
    pub tolerance: f64,
}

/// Composes two described programs with each strategy and compares the
/// result with the directly multiplied unitary.
pub fn cmd_compose(cfg: &ComposeConfig) -> Result<Value> {
    let load = |p: &Path| -> Result<ProgramDescription> {
        ProgramDescription::deserialize(&read(p)?).map_err(|e| CliError::in_file(p, e))
    };
    let d1 = load(&cfg.first)?;
    let d2 = load(&cfg.second)?;
    if d1.qubits() != d2.qubits() {
        return Err(qvn_core::Error::Dimension(format!(
            "programs act on {} and {} qubits",
            d1.qubits(),
            d2.qubits()
        ))
        .into());
    }
    if cfg.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    let p1 = qvn_core::memory::synthesize::<f64>(&d1)?;
    let p2 = qvn_core::memory::synthesize::<f64>(&d2)?;
    let direct = p2.unitary().matrix() * p1.unitary().matrix();
    let mut rows = Vec::new();
    for (si, &strategy) in cfg.strategies.iter().enumerate() {
        let mut fids = Vec::with_capacity(cfg.repeats);
        let mut rounds = Vec::with_capacity(cfg.repeats);
        for r in 0..cfg.repeats {
            let mut rng = RngStream::new(cfg.seed, (si * cfg.repeats + r) as u64);
            let c = compose(&p1, &p2, strategy, &mut rng)?;
            fids.push(c.program.fidelity_with(&direct));
            rounds.push(c.shots_used);
        }
        let min = fids.iter().copied().fold(f64::INFINITY, f64::min);
        let total: usize = rounds.iter().sum();
        let mean = total as f64 / cfg.repeats as f64;
        let var = rounds
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / (cfg.repeats.max(2) - 1) as f64;
        rows.push(json!({
            "strategy": strategy.name(),
            "runs": cfg.repeats,
            "fidelity_min": min,
            "fidelity_mean": fids.iter().sum::<f64>() / cfg.repeats as f64,
            "pass": min >= 1.0 - cfg.tolerance,
            "rounds_total": total,
            "rounds_mean": mean,
            "rounds_std_error": (var / cfg.repeats as f64).sqrt(),
        }));
    }
    Ok(json!({
        "command": "compose",
        "first": d1.name(),
        "second": d2.name(),
        "dimension": p1.d(),
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
        "expected_rounds_repeat_until_success": (p1.d() * p1.d()) as f64,
        "strategies": rows,
    }))
}

/// Knill–Laflamme and detection report for a code file with errors.
pub fn cmd_qec_check(path: &Path, tolerance: f64) -> Result<Value> {
    let file =
        CodeFile::<f64>::deserialize(&read(path)?).map_err(|e| CliError::in_file(path, e))?;
    let errors = file.errors.ok_or_else(|| {
        CliError::in_file(
            path,
            qvn_core::Error::Argument("the code file lists no errors".into()),
        )
    })?;
    let kl = check_kl_tol(&file.code, &errors, tolerance)?;
    let det = check_detection(&file.code, &errors)?;
    Ok(json!({
        "command": "qec-check",
        "code": file.code.name(),
        "n": file.code.n(),
        "k": file.code.k(),
        "distance": file.code.distance(),
        "errors": errors.labels(),
        "tolerance": tolerance,
        "satisfied": kl.satisfied,
        "kl": {
            "satisfied": kl.satisfied,
            "max_residual": kl.max_residual,
            "coefficients": matrix(&kl.coefficients),
            "residuals": kl.residuals,
        },
        "detection": {
            "satisfied": det.satisfied,
            "coefficients": det.coefficients.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
            "residuals": det.residuals,
        },
    }))
}

/// Exact value of a topological diagram.
pub fn cmd_topo_eval(path: &Path) -> Result<Value> {
    let diagram = parse_diagram::<f64>(&read(path)?).map_err(|e| CliError::in_file(path, e))?;
    let value = eval_topological(&diagram)?;
    let mut out = json!({
        "command": "topo-eval",
        "vertices": diagram.vertices().len(),
        "segments": diagram.segments().len(),
    });
    match value {
        TopoValue::Closed(z) => {
            out["closed"] = json!(true);
            out["amplitude"] = json!({
                "re": z.re,
                "im": z.im,
                "abs": z.norm(),
                "text": format!("{:.15}{:+.15}i", z.re, z.im),
            });
        }
        TopoValue::Open {
            amplitudes,
            endpoints,
        } => {
            out["closed"] = json!(false);
            out["open_endpoints"] =
                json!(endpoints.iter().map(|e| e.to_string()).collect::<Vec<_>>());
            out["amplitudes"] = Value::Array(amplitudes.iter().map(|z| complex(*z)).collect());
        }
    }
    Ok(out)
}
