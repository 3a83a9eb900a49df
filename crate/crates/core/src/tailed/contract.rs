//! Contraction (fusion) of two endpoints by a Bell measurement.

use crate::error::{Error, Result};
use crate::qkernel::measure::project_out;
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::PureState;
use crate::scalar::{CVector, Real};
use crate::uqt::basis::BellBasis;
use crate::uqt::compose::bell_measure_pair;

#[derive(Debug, Clone)]
pub struct Contraction<R: Real> {
    /// Byproduct index in the default Bell basis; 0 when postselected.
    pub k: usize,
    pub probability: f64,
    /// Unnormalised `(⟨ω_{σ_k}| ⊗ I)|ψ⟩` on the remaining wires.
    pub raw: CVector<R>,
    /// Renormalised post state; `None` when a postselected branch vanishes.
    pub state: Option<PureState<R>>,
}

impl<R: Real> Contraction<R> {
    pub fn vanished(&self) -> bool {
        self.state.is_none()
    }
}

pub fn contract<R: Real>(
    state: &PureState<R>,
    a: usize,
    b: usize,
    rng: &mut RngStream,
    postselect_trivial: bool,
) -> Result<Contraction<R>> {
    let dims = state.dims();
    if a >= dims.len() || b >= dims.len() || a == b || dims[a] != dims[b] {
        return Err(Error::Validation(format!(
            "cannot contract wires {a} and {b}"
        )));
    }
    let basis = BellBasis::default_for(dims[a]);
    let rest: Vec<usize> = (0..dims.len())
        .filter(|&i| i != a && i != b)
        .map(|i| dims[i])
        .collect();
    if postselect_trivial {
        let raw = project_out(state, &[a, b], basis.vector(0))?;
        let p = raw.norm_squared();
        let post = if p > R::zero() {
            Some(PureState::from_parts_unchecked(raw.unscale(p.sqrt()), rest))
        } else {
            None
        };
        return Ok(Contraction {
            k: 0,
            probability: p.as_f64(),
            raw,
            state: post,
        });
    }
    let out = bell_measure_pair(state, a, b, &basis, rng)?;
    let raw = out.state.amplitudes() * crate::scalar::re(R::of(out.probability.sqrt()));
    Ok(Contraction {
        k: out.k,
        probability: out.probability,
        raw,
        state: Some(out.state),
    })
}
