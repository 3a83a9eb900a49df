//! Input injection by measurement, tail sampling and the Toffoli cascade.

use crate::error::{dim_err, Error, Result};
use crate::qkernel::gates;
use crate::qkernel::linalg::{apply_on_wires, kron_vec, zero};
use crate::qkernel::measure::{measure_computational, project_out};
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::{PureState, UnitaryOp};
use crate::scalar::{re, CMatrix, CVector, Real};
use crate::tailed::circuit::InjectionMode;

/// Reversible circuit of multi-controlled X gates on qubits; each gate lists
/// its controls followed by its target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibleCircuit {
    qubits: usize,
    gates: Vec<Vec<usize>>,
}

impl ReversibleCircuit {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Vec<usize>] {
        &self.gates
    }

    /// Image of a computational basis state (qubit 0 most significant).
    pub fn apply_bits(&self, mut x: usize) -> usize {
        let bit = |q: usize| self.qubits - 1 - q;
        for g in &self.gates {
            let (target, controls) = g.split_last().expect("non-empty gate");
            if controls.iter().all(|&c| (x >> bit(c)) & 1 == 1) {
                x ^= 1 << bit(*target);
            }
        }
        x
    }

    /// Applies the circuit to the listed qubit wires of a state.
    pub fn apply<R: Real>(
        &self,
        state: &CVector<R>,
        dims: &[usize],
        wires: &[usize],
    ) -> Result<CVector<R>> {
        if wires.len() != self.qubits {
            return dim_err(format!(
                "circuit on {} qubits given {} wires",
                self.qubits,
                wires.len()
            ));
        }
        let mut v = state.clone();
        for g in &self.gates {
            let w: Vec<usize> = g.iter().map(|&q| wires[q]).collect();
            v = apply_on_wires(&v, dims, &gates::mcx(g.len() - 1), &w)?;
        }
        Ok(v)
    }

    /// Dense permutation matrix (size `2^qubits`).
    pub fn unitary<R: Real>(&self) -> UnitaryOp<R> {
        let n = 1usize << self.qubits;
        let mut m = CMatrix::from_element(n, n, zero());
        for x in 0..n {
            m[(self.apply_bits(x), x)] = re(R::one());
        }
        UnitaryOp::from_matrix_unchecked(m)
    }
}

/// The `n`-fold Toffoli on `n + 1` qubits as a single gate.
pub fn monolithic_toffoli(n: usize) -> ReversibleCircuit {
    ReversibleCircuit {
        qubits: n + 1,
        gates: vec![(0..=n).collect()],
    }
}

/// `n`-fold Toffoli on qubits `[c_1..c_n, a_1..a_{n−1}, t]`: a chain of
/// `n − 1` Toffolis computes the AND into the work ancillas, a CNOT copies it
/// to `t`, and the chain is undone so the ancillas return to `|0⟩`.
pub fn toffoli_cascade(n: usize) -> Result<ReversibleCircuit> {
    if n < 2 {
        return Err(Error::Argument(
            "a Toffoli cascade needs at least two controls".into(),
        ));
    }
    let anc = |i: usize| n + i;
    let target = 2 * n - 1;
    let mut chain = vec![vec![0, 1, anc(0)]];
    for i in 1..n - 1 {
        chain.push(vec![anc(i - 1), i + 1, anc(i)]);
    }
    let mut gates = chain.clone();
    gates.push(vec![anc(n - 2), target]);
    gates.extend(chain.into_iter().rev());
    Ok(ReversibleCircuit {
        qubits: 2 * n,
        gates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    P0,
    P1,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Self::P0 => "P0",
            Self::P1 => "P1",
        }
    }
}

/// Post-measurement branch; `state` is `None` when the branch has zero weight.
#[derive(Debug, Clone)]
pub struct BranchState<R: Real> {
    pub probability: R,
    pub state: Option<PureState<R>>,
}

fn check_qubit_wires<R: Real>(state: &PureState<R>, wires: &[usize]) -> Result<()> {
    for (n, &w) in wires.iter().enumerate() {
        if w >= state.dims().len() || state.dims()[w] != 2 || wires[..n].contains(&w) {
            return Err(Error::Validation(format!(
                "wire {w} is not a distinct qubit wire"
            )));
        }
    }
    Ok(())
}

fn flip_zeros<R: Real>(
    v: &CVector<R>,
    dims: &[usize],
    tails: &[usize],
    bits: &[bool],
) -> Result<CVector<R>> {
    let mut v = v.clone();
    for (&t, &b) in tails.iter().zip(bits) {
        if !b {
            v = apply_on_wires(&v, dims, &gates::x(), &[t])?;
        }
    }
    Ok(v)
}

/// Both branches of the injection measurement, computed coherently through
/// the Toffoli circuit and a `Z` readout of its target ancilla.
pub fn injection_branches<R: Real>(
    state: &PureState<R>,
    tails: &[usize],
    bits: &[bool],
    mode: InjectionMode,
) -> Result<[BranchState<R>; 2]> {
    if tails.len() != bits.len() || tails.is_empty() {
        return Err(Error::Validation("injection needs one bit per tail".into()));
    }
    check_qubit_wires(state, tails)?;
    let n = tails.len();
    let dims = state.dims().to_vec();
    let framed = flip_zeros(state.amplitudes(), &dims, tails, bits)?;

    let (circuit, work) = match mode {
        InjectionMode::Cascade if n >= 2 => (toffoli_cascade(n)?, n - 1),
        _ => (monolithic_toffoli(n), 0),
    };
    let extra = work + 1;
    let mut anc = CVector::zeros(1 << extra);
    anc[0] = re(R::one());
    let joined = kron_vec(&framed, &anc);
    let mut jdims = dims.clone();
    jdims.extend(std::iter::repeat_n(2, extra));
    let anc_wires: Vec<usize> = (dims.len()..dims.len() + extra).collect();
    let mut wires = tails.to_vec();
    wires.extend(&anc_wires);
    let out = circuit.apply(&joined, &jdims, &wires)?;
    let joint = PureState::from_parts_unchecked(out, jdims);

    let mut result = Vec::with_capacity(2);
    let mut total = R::zero();
    for b in 0..2 {
        // work ancillas in |0⟩, target in |b⟩
        let mut effect = CVector::zeros(1 << extra);
        effect[b] = re(R::one());
        let v = project_out(&joint, &anc_wires, &effect)?;
        let p = v.norm_squared();
        total += p;
        let state = if p > R::zero() {
            let v = flip_zeros(&v.unscale(p.sqrt()), &dims, tails, bits)?;
            Some(PureState::from_parts_unchecked(v, dims.clone()))
        } else {
            None
        };
        result.push(BranchState {
            probability: p,
            state,
        });
    }
    if (total - R::one()).abs() > R::default_tolerance() * R::of(100.0) {
        return Err(Error::Numerical(format!(
            "ancillas not restored by the injection circuit (weight {:e})",
            total.as_f64()
        )));
    }
    let p1 = result.pop().expect("two branches");
    let p0 = result.pop().expect("two branches");
    Ok([p0, p1])
}

#[derive(Debug, Clone)]
pub struct Injection<R: Real> {
    pub branch: Branch,
    pub probability: f64,
    pub state: PureState<R>,
}

pub fn inject<R: Real>(
    state: &PureState<R>,
    tails: &[usize],
    bits: &[bool],
    mode: InjectionMode,
    rng: &mut RngStream,
) -> Result<Injection<R>> {
    let [b0, b1] = injection_branches(state, tails, bits, mode)?;
    sample_branch(b0, b1, rng)
}

pub(crate) fn sample_branch<R: Real>(
    b0: BranchState<R>,
    b1: BranchState<R>,
    rng: &mut RngStream,
) -> Result<Injection<R>> {
    let w = [b0.probability.as_f64(), b1.probability.as_f64()];
    let (branch, chosen) = if rng.sample_index(&w) == 1 {
        (Branch::P1, b1)
    } else {
        (Branch::P0, b0)
    };
    Ok(Injection {
        branch,
        probability: chosen.probability.as_f64(),
        state: chosen
            .state
            .ok_or_else(|| Error::Numerical("sampled a zero-weight branch".into()))?,
    })
}

/// Exact two-outcome measurement with `P1ᵗ = |ψ⟩⟨ψ|` on the tails, so that
/// a program's heads receive `U|ψ⟩` in the `P1` branch.
pub fn inject_state<R: Real>(
    state: &PureState<R>,
    tails: &[usize],
    psi: &CVector<R>,
    rng: &mut RngStream,
) -> Result<Injection<R>> {
    let dims = state.dims();
    let sub: usize = tails
        .iter()
        .map(|&t| dims.get(t).copied().unwrap_or(0))
        .product();
    if psi.len() != sub {
        return dim_err(format!(
            "input of length {} for tails of dimension {sub}",
            psi.len()
        ));
    }
    let conj = psi.map(|z| z.conj());
    let p1 = &conj * conj.adjoint();
    let v1 = apply_on_wires(state.amplitudes(), dims, &p1, tails)?;
    let v0 = state.amplitudes() - &v1;
    let make = |v: CVector<R>| {
        let p = v.norm_squared();
        BranchState {
            probability: p,
            state: (p > R::zero())
                .then(|| PureState::from_parts_unchecked(v.unscale(p.sqrt()), dims.to_vec())),
        }
    };
    sample_branch(make(v0), make(v1), rng)
}

#[derive(Debug, Clone)]
pub struct TailSample<R: Real> {
    pub bit: usize,
    pub probability: f64,
    /// State with the tail collapsed (and kept).
    pub state: PureState<R>,
}

/// `Z` measurement of a tail: injects `|bit⟩` into the corresponding head.
pub fn sample_tail_z<R: Real>(
    state: &PureState<R>,
    tail: usize,
    rng: &mut RngStream,
) -> Result<TailSample<R>> {
    check_qubit_wires(state, &[tail])?;
    let (digits, p, post) = measure_computational(state, &[tail], rng)?;
    Ok(TailSample {
        bit: digits[0],
        probability: p,
        state: post,
    })
}
