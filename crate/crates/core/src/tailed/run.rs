//! Shot-by-shot execution of tailed circuits and the readout estimator.
//!
//! A `P1` shot measures `O` on `U|b⟩` and estimates `o_f` directly. A `P0`
//! shot measures `O` on the complementary state, whose mean is
//! `(tr O − o_f)/(2ⁿ − 1)`; inverting that gives a second estimate. The two
//! are merged by inverse-variance weighting.

use crate::error::{Error, Result};
use crate::qkernel::linalg::{partial_trace_pure, permute_wires, trace};
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::PureState;
use crate::scalar::Real;
use crate::tailed::circuit::{simulate, Endpoint, InjectionSpec, ReadoutSpec, TailedCircuit};
use crate::tailed::contract::contract;
use crate::tailed::inject::{injection_branches, Branch};
use crate::uqt::program::StoredProgram;

/// One executed shot.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub shot: usize,
    pub branch: Branch,
    /// Byproduct indices of the circuit's contractions, in declaration order.
    pub bell_outcomes: Vec<usize>,
    /// Sampled eigenvalue of the observable.
    pub value: f64,
    /// Hash of the post-injection state, when requested.
    pub post_state_digest: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BranchStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

impl BranchStats {
    fn from_values(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count();
        if count == 0 {
            return Self::default();
        }
        let mean = values.clone().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            count,
            mean,
            variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub p1: BranchStats,
    pub p0: BranchStats,
    pub shots: usize,
}

/// Point estimate of `o_f` from raw shot records.
pub fn estimate(records: &[RunRecord], trace_o: f64, injected: usize) -> Result<Estimate> {
    let pick = |b: Branch| {
        records
            .iter()
            .filter(move |r| r.branch == b)
            .map(|r| r.value)
    };
    let p1 = BranchStats::from_values(pick(Branch::P1));
    let p0 = BranchStats::from_values(pick(Branch::P0));
    let factor = 2f64.powi(injected as i32) - 1.0;
    let mut candidates = Vec::new();
    if p1.count >= 2 {
        candidates.push((p1.mean, (p1.variance / p1.count as f64).sqrt()));
    }
    if p0.count >= 2 && factor > 0.0 {
        candidates.push((
            trace_o - factor * p0.mean,
            factor * (p0.variance / p0.count as f64).sqrt(),
        ));
    }
    if candidates.is_empty() {
        return Err(Error::Estimation(format!(
            "no branch has two samples ({} P1, {} P0)",
            p1.count, p0.count
        )));
    }
    let (value, std_error) = if let Some(&(v, _)) = candidates.iter().find(|(_, se)| *se == 0.0) {
        (v, 0.0)
    } else {
        let w: Vec<f64> = candidates.iter().map(|(_, se)| 1.0 / (se * se)).collect();
        let total: f64 = w.iter().sum();
        let v = candidates
            .iter()
            .zip(&w)
            .map(|((v, _), w)| v * w)
            .sum::<f64>()
            / total;
        (v, (1.0 / total).sqrt())
    };
    Ok(Estimate {
        value,
        std_error,
        p1,
        p0,
        shots: records.len(),
    })
}

/// Observable distribution in each injection branch.
#[derive(Debug, Clone)]
struct BranchModel {
    weights: [f64; 2],
    values: [Vec<f64>; 2],
    outcome_weights: [Vec<f64>; 2],
    digests: [Option<u64>; 2],
}

fn digest<R: Real>(s: &PureState<R>) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for z in s.amplitudes().iter() {
        z.re.as_f64().to_bits().hash(&mut h);
        z.im.as_f64().to_bits().hash(&mut h);
    }
    h.finish()
}

/// Runs a tailed circuit with its injection and readout specs.
#[derive(Debug, Clone)]
pub struct Executor<R: Real> {
    circuit: TailedCircuit<R>,
    injection: InjectionSpec,
    readout: ReadoutSpec<R>,
    base: PureState<R>,
    spectrum: Vec<(f64, crate::scalar::CMatrix<R>)>,
    cached: Option<BranchModel>,
    record_states: bool,
}

impl<R: Real> Executor<R> {
    pub fn new(circuit: &TailedCircuit<R>) -> Result<Self> {
        let injection = circuit
            .injection()
            .cloned()
            .ok_or_else(|| Error::Configuration("circuit has no injection spec".into()))?;
        let readout = circuit
            .readout()
            .cloned()
            .ok_or_else(|| Error::Configuration("circuit has no readout spec".into()))?;
        let base = simulate(circuit)?;
        let spectrum = readout
            .observable
            .spectral(R::default_tolerance() * R::of(1e3))
            .into_iter()
            .map(|(v, p)| (v.as_f64(), p))
            .collect();
        let mut ex = Self {
            circuit: circuit.clone(),
            injection,
            readout,
            base,
            spectrum,
            cached: None,
            record_states: false,
        };
        if circuit.contractions().is_empty() {
            let labels = ex.all_labels();
            ex.cached = Some(ex.branch_model(&ex.base, &labels)?);
        }
        Ok(ex)
    }

    pub fn record_states(mut self, flag: bool) -> Self {
        self.record_states = flag;
        if let (Some(m), false) = (&mut self.cached, flag) {
            m.digests = [None, None];
        }
        self
    }

    pub fn circuit(&self) -> &TailedCircuit<R> {
        &self.circuit
    }

    pub fn injected_bits(&self) -> usize {
        self.injection.bits.len()
    }

    fn all_labels(&self) -> Vec<Endpoint> {
        let mut l = Vec::new();
        for e in 0..self.circuit.ebits() {
            l.push(Endpoint::Head(e));
            l.push(Endpoint::Tail(e));
        }
        l.extend((0..self.circuit.qubits()).map(Endpoint::Qubit));
        l
    }

    fn positions(labels: &[Endpoint], eps: &[Endpoint]) -> Result<Vec<usize>> {
        eps.iter()
            .map(|e| {
                labels
                    .iter()
                    .position(|l| l == e)
                    .ok_or_else(|| Error::Validation(format!("endpoint {e} was consumed")))
            })
            .collect()
    }

    fn branch_model(&self, state: &PureState<R>, labels: &[Endpoint]) -> Result<BranchModel> {
        let tails = Self::positions(labels, &self.injection.tails)?;
        let heads = Self::positions(labels, &self.readout.heads)?;
        let branches =
            injection_branches(state, &tails, &self.injection.bits, self.injection.mode)?;
        let mut weights = [0.0; 2];
        let mut values: [Vec<f64>; 2] = Default::default();
        let mut outcome_weights: [Vec<f64>; 2] = Default::default();
        let mut digests = [None, None];
        for (b, br) in branches.iter().enumerate() {
            weights[b] = br.probability.as_f64();
            let Some(s) = &br.state else { continue };
            // bring the readout wires to the front in the listed order
            let mut perm = heads.clone();
            perm.extend((0..s.dims().len()).filter(|w| !heads.contains(w)));
            let moved = permute_wires(s.amplitudes(), s.dims(), &perm)?;
            let pdims: Vec<usize> = perm.iter().map(|&w| s.dims()[w]).collect();
            let keep: Vec<usize> = (0..heads.len()).collect();
            let rho = partial_trace_pure(&moved, &pdims, &keep)?;
            for (v, proj) in &self.spectrum {
                values[b].push(*v);
                outcome_weights[b].push(trace(&(proj * &rho)).re.as_f64().max(0.0));
            }
            if self.record_states {
                digests[b] = Some(digest(s));
            }
        }
        Ok(BranchModel {
            weights,
            values,
            outcome_weights,
            digests,
        })
    }

    /// Executes one shot: contractions (sampled, or postselected in
    /// topological mode), injection, then readout.
    pub fn shot(&self, index: usize, rng: &mut RngStream) -> Result<RunRecord> {
        let mut outcomes = Vec::new();
        let dynamic;
        let model = match &self.cached {
            Some(m) => m,
            None => {
                let mut state = self.base.clone();
                let mut labels = self.all_labels();
                for &(a, b) in self.circuit.contractions() {
                    let pos = Self::positions(&labels, &[a, b])?;
                    let c = contract(&state, pos[0], pos[1], rng, self.circuit.is_topological())?;
                    outcomes.push(c.k);
                    state = c.state.ok_or_else(|| {
                        Error::Estimation("postselected contraction has zero amplitude".into())
                    })?;
                    labels.retain(|l| *l != a && *l != b);
                }
                dynamic = self.branch_model(&state, &labels)?;
                &dynamic
            }
        };
        let b = rng.sample_index(&model.weights);
        let k = rng.sample_index(&model.outcome_weights[b]);
        Ok(RunRecord {
            shot: index,
            branch: if b == 1 { Branch::P1 } else { Branch::P0 },
            bell_outcomes: outcomes,
            value: model.values[b][k],
            post_state_digest: model.digests[b],
        })
    }

    pub fn run(&self, shots: usize, rng: &mut RngStream) -> Result<(Estimate, Vec<RunRecord>)> {
        let records = (0..shots)
            .map(|i| self.shot(i, rng))
            .collect::<Result<Vec<_>>>()?;
        let est = estimate(&records, self.readout.trace.as_f64(), self.injected_bits())?;
        Ok((est, records))
    }

    /// Exact `P1`-branch expectation, for reference.
    pub fn exact_p1_expectation(&self) -> Option<f64> {
        let m = self.cached.as_ref()?;
        let w: f64 = m.outcome_weights[1].iter().sum();
        (w > 0.0).then(|| {
            m.values[1]
                .iter()
                .zip(&m.outcome_weights[1])
                .map(|(v, p)| v * p)
                .sum::<f64>()
                / w
        })
    }

    /// Exact probability of the `P1` branch when it does not depend on sampling.
    pub fn p1_probability(&self) -> Option<f64> {
        self.cached.as_ref().map(|m| m.weights[1])
    }
}

pub enum AlgorithmInput<'a, R: Real> {
    Program(&'a StoredProgram<R>),
    Circuit(&'a TailedCircuit<R>),
}

pub fn run_algorithm<R: Real>(
    input: AlgorithmInput<'_, R>,
    readout: &ReadoutSpec<R>,
    injection: &InjectionSpec,
    shots: usize,
    rng: &mut RngStream,
) -> Result<(Estimate, Vec<RunRecord>)> {
    if shots == 0 {
        return Err(Error::Argument("shots must be positive".into()));
    }
    let mut circuit = match input {
        AlgorithmInput::Program(p) => TailedCircuit::program(p.unitary().clone(), 2)?,
        AlgorithmInput::Circuit(c) => c.clone(),
    };
    circuit.set_injection(injection.clone())?;
    circuit.set_readout(readout.clone())?;
    Executor::new(&circuit)?.run(shots, rng)
}
