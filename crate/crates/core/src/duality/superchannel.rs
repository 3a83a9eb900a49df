//! Superchannels (pre/post-processing of a channel) and quantum combs.

use crate::duality::choi::ChoiState;
use crate::error::{dim_err, Error, Result};
use crate::qkernel::linalg::{apply_on_wires, left_apply_on_wires, partial_trace_matrix, zero};
use crate::qkernel::state::{DensityOperator, KrausChannel, UnitaryOp};
use crate::scalar::{re, CMatrix, Real};

/// `E ↦ tr_{anc,extra}[V (E ⊗ I)(U (· ⊗ |0⟩⟨0|) U†) V†]` with `U` on
/// system ⊗ ancilla and `V` on system ⊗ ancilla ⊗ extra.
#[derive(Debug, Clone, PartialEq)]
pub struct Superchannel<R: Real> {
    system_dim: usize,
    ancilla_dim: usize,
    extra_dim: usize,
    pre: UnitaryOp<R>,
    post: UnitaryOp<R>,
}

impl<R: Real> Superchannel<R> {
    pub fn new(system_dim: usize, pre: UnitaryOp<R>, post: UnitaryOp<R>) -> Result<Self> {
        if system_dim == 0 || !pre.dim().is_multiple_of(system_dim) {
            return dim_err(format!(
                "pre-processing of dimension {} on a {system_dim}-level system",
                pre.dim()
            ));
        }
        let ancilla_dim = pre.dim() / system_dim;
        if !post.dim().is_multiple_of(pre.dim()) {
            return dim_err(format!(
                "post-processing dimension {} is not a multiple of {}",
                post.dim(),
                pre.dim()
            ));
        }
        Ok(Self {
            system_dim,
            ancilla_dim,
            extra_dim: post.dim() / pre.dim(),
            pre,
            post,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn extra_dim(&self) -> usize {
        self.extra_dim
    }

    pub fn pre(&self) -> &UnitaryOp<R> {
        &self.pre
    }

    pub fn post(&self) -> &UnitaryOp<R> {
        &self.post
    }

    fn check_input(&self, d_in: usize, d_out: usize) -> Result<()> {
        if d_in != self.system_dim || d_out != self.system_dim {
            return dim_err(format!(
                "superchannel on dimension {} given a {d_in}→{d_out} channel",
                self.system_dim
            ));
        }
        Ok(())
    }
}

/// Kraus form of the transformed channel.
pub fn apply_superchannel<R: Real>(
    s: &Superchannel<R>,
    ch: &KrausChannel<R>,
) -> Result<KrausChannel<R>> {
    s.check_input(ch.dim_in(), ch.dim_out())?;
    Comb::from_superchannel(s).apply(std::slice::from_ref(ch))
}

/// Same map, evaluated as a link product directly on `ω_E`; returns the
/// Choi state of the transformed channel.
pub fn apply_superchannel_choi<R: Real>(
    s: &Superchannel<R>,
    choi: &ChoiState<R>,
) -> Result<ChoiState<R>> {
    let d = s.system_dim;
    s.check_input(choi.d(), choi.d())?;
    let (a, e) = (s.ancilla_dim, s.extra_dim);
    // |ω⟩_{S,R} ⊗ |0⟩_a ⊗ |0⟩_e, wires ordered (S, a, e, R)
    let dims = [d, a, e, d];
    let total = d * a * e * d;
    let amp = re(R::one() / R::count(d).sqrt());
    let mut psi = crate::scalar::CVector::zeros(total);
    for i in 0..d {
        psi[((i * a) * e) * d + i] = amp;
    }
    let psi = apply_on_wires(&psi, &dims, s.pre.matrix(), &[0, 1])?;
    let sigma = &psi * psi.adjoint();

    // (E ⊗ I)(σ)[(o1, r1), (o2, r2)] = d Σ_{jk} ω[(o1, j), (o2, k)] σ[(j, r1), (k, r2)]
    let rest = total / d;
    let w = choi.matrix();
    let scale = re(R::count(d));
    let mut linked = CMatrix::zeros(total, total);
    for o1 in 0..d {
        for o2 in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let wjk = w[(o1 * d + j, o2 * d + k)];
                    if wjk == zero() {
                        continue;
                    }
                    let wjk = wjk * scale;
                    for r1 in 0..rest {
                        for r2 in 0..rest {
                            linked[(o1 * rest + r1, o2 * rest + r2)] +=
                                wjk * sigma[(j * rest + r1, k * rest + r2)];
                        }
                    }
                }
            }
        }
    }
    let post = crate::qkernel::linalg::embed_on_wires(&dims, s.post.matrix(), &[0, 1, 2])?;
    let out = &post * linked * post.adjoint();
    let reduced = partial_trace_matrix(&out, &dims, &[0, 3])?;
    ChoiState::from_matrix(reduced, d, R::default_tolerance() * R::of(100.0))
}

/// Sequence of unitary teeth `T_0, …, T_n` acting on system ⊗ memory, with
/// `n` slots for input channels. Memory may grow between teeth by appending
/// fresh `|0⟩` ancillas.
#[derive(Debug, Clone, PartialEq)]
pub struct Comb<R: Real> {
    system_dim: usize,
    teeth: Vec<UnitaryOp<R>>,
    memory_dims: Vec<usize>,
}

impl<R: Real> Comb<R> {
    pub fn new(system_dim: usize, teeth: Vec<UnitaryOp<R>>) -> Result<Self> {
        if teeth.is_empty() {
            return Err(Error::Argument("a comb needs at least one tooth".into()));
        }
        let mut memory_dims = Vec::with_capacity(teeth.len());
        for (j, t) in teeth.iter().enumerate() {
            if system_dim == 0 || t.dim() % system_dim != 0 {
                return dim_err(format!(
                    "tooth {j} of dimension {} on a {system_dim}-level system",
                    t.dim()
                ));
            }
            let m = t.dim() / system_dim;
            if let Some(&prev) = memory_dims.last() {
                if !m.is_multiple_of(prev) {
                    return dim_err(format!(
                        "memory of tooth {j} ({m}) does not extend the previous ({prev})"
                    ));
                }
            }
            memory_dims.push(m);
        }
        Ok(Self {
            system_dim,
            teeth,
            memory_dims,
        })
    }

    /// A superchannel is a comb with two teeth and one slot.
    pub fn from_superchannel(s: &Superchannel<R>) -> Self {
        Self {
            system_dim: s.system_dim,
            teeth: vec![s.pre.clone(), s.post.clone()],
            memory_dims: vec![s.ancilla_dim, s.ancilla_dim * s.extra_dim],
        }
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn slots(&self) -> usize {
        self.teeth.len() - 1
    }

    pub fn teeth(&self) -> &[UnitaryOp<R>] {
        &self.teeth
    }

    pub fn memory_dims(&self) -> &[usize] {
        &self.memory_dims
    }

    /// Kraus operators of the resulting channel on the system.
    pub fn apply(&self, inputs: &[KrausChannel<R>]) -> Result<KrausChannel<R>> {
        if inputs.len() != self.slots() {
            return dim_err(format!(
                "comb with {} slots given {} channels",
                self.slots(),
                inputs.len()
            ));
        }
        let d = self.system_dim;
        for (j, ch) in inputs.iter().enumerate() {
            if ch.dim_in() != d || ch.dim_out() != d {
                return dim_err(format!("slot {j} expects a {d}-level channel"));
            }
        }
        let m0 = self.memory_dims[0];
        let t0 = self.teeth[0].matrix();
        // branch operators map the system into system ⊗ memory
        let mut branches = vec![CMatrix::from_fn(d * m0, d, |row, s| t0[(row, s * m0)])];
        for (j, ch) in inputs.iter().enumerate() {
            let (m, m_next) = (self.memory_dims[j], self.memory_dims[j + 1]);
            let grow = m_next / m;
            let tooth = self.teeth[j + 1].matrix();
            let mut next = Vec::with_capacity(branches.len() * ch.kraus().len());
            for b in &branches {
                for k in ch.kraus() {
                    let acted = left_apply_on_wires(b, &[d, m], k, &[0])?;
                    let mut grown = CMatrix::zeros(d * m_next, d);
                    for row in 0..d * m {
                        grown.set_row(row * grow, &acted.row(row));
                    }
                    next.push(tooth * grown);
                }
            }
            branches = next;
        }
        let m_last = *self.memory_dims.last().expect("non-empty");
        let mut kraus = Vec::new();
        for b in &branches {
            for mm in 0..m_last {
                let k = CMatrix::from_fn(d, d, |o, s| b[(o * m_last + mm, s)]);
                if k.iter().any(|z| *z != zero()) {
                    kraus.push(k);
                }
            }
        }
        if kraus.is_empty() {
            kraus.push(CMatrix::zeros(d, d));
        }
        KrausChannel::with_tolerance(kraus, R::default_tolerance() * R::of(100.0))
    }

    /// Output state of the comb on `rho` (convenience wrapper).
    pub fn apply_to_state(
        &self,
        inputs: &[KrausChannel<R>],
        rho: &DensityOperator<R>,
    ) -> Result<DensityOperator<R>> {
        crate::qkernel::state::apply_channel(&self.apply(inputs)?, rho)
    }
}

pub fn apply_comb<R: Real>(comb: &Comb<R>, inputs: &[KrausChannel<R>]) -> Result<KrausChannel<R>> {
    comb.apply(inputs)
}
