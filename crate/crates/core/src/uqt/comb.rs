//! Combs realised from stored programs: each input is lifted to act
//! trivially on the memory, and the teeth and inputs are composed in order.

use crate::error::{dim_err, Error, Result};
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::KrausChannel;
use crate::scalar::{CMatrix, Real};
use crate::uqt::compose::{compose, ByproductStrategy};
use crate::uqt::program::StoredProgram;

#[derive(Debug, Clone)]
pub struct RealisedComb<R: Real> {
    /// Program of `T_n (Q_n ⊗ I) ⋯ (Q_1 ⊗ I) T_0` on system ⊗ memory.
    pub program: StoredProgram<R>,
    /// Channel on the system with the memory starting in `|0⟩` and discarded.
    pub channel: KrausChannel<R>,
    pub shots_used: usize,
}

/// `teeth` act on system ⊗ memory (constant memory dimension); `inputs` act
/// on the system alone.
pub fn realise_comb<R: Real>(
    teeth: &[StoredProgram<R>],
    inputs: &[StoredProgram<R>],
    strategy: ByproductStrategy,
    rng: &mut RngStream,
) -> Result<RealisedComb<R>> {
    let (first, rest) = teeth
        .split_first()
        .ok_or_else(|| Error::Argument("a comb needs at least one tooth".into()))?;
    if rest.len() != inputs.len() {
        return dim_err(format!(
            "{} teeth leave {} slots, given {} inputs",
            teeth.len(),
            rest.len(),
            inputs.len()
        ));
    }
    let big = first.d();
    if teeth.iter().any(|t| t.d() != big) {
        return dim_err("teeth must share one dimension");
    }
    let d = inputs.first().map_or(big, StoredProgram::d);
    if inputs.iter().any(|q| q.d() != d) || big % d != 0 {
        return dim_err(format!(
            "inputs of dimension {d} do not divide teeth of dimension {big}"
        ));
    }
    let m = big / d;
    let memory_id = StoredProgram::identity(m);
    let mut acc = first.clone();
    let mut shots = 0;
    for (q, tooth) in inputs.iter().zip(rest) {
        let lifted = q.tensor(&memory_id)?;
        let c = compose(&acc, &lifted, strategy, rng)?;
        shots += c.shots_used;
        let c = compose(&c.program, tooth, strategy, rng)?;
        shots += c.shots_used;
        acc = c.program;
    }
    let w = acc.unitary().matrix();
    let kraus: Vec<CMatrix<R>> = (0..m)
        .map(|i| CMatrix::from_fn(d, d, |o, s| w[(o * m + i, s * m)]))
        .collect();
    let channel = KrausChannel::with_tolerance(kraus, R::default_tolerance() * R::of(100.0))?;
    Ok(RealisedComb {
        program: acc,
        channel,
        shots_used: shots,
    })
}
