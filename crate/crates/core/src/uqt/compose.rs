//! Program composition by gate teleportation.
//!
//! Measuring the head of `|ω_{U1}⟩` and the tail of `|ω_{U2}⟩` in the Bell
//! basis `|ω_{σ_k}⟩` leaves `|ω_{U2 σ_k† U1}⟩` on (head₂, tail₁), each
//! outcome with probability `1/d²`. The byproduct sits between the factors,
//! so it is removed by `C_k = U2 σ_k U2†` on the head.
//!
//! Pairing two heads instead leaves `|ω_{Sᵗ σ_k† U1}⟩` on (tail_S, tail₁);
//! for a symmetric `S` the transpose disappears, which is what the
//! symmetric-pair strategy exploits.

use crate::duality::choi::ChoiState;
use crate::error::{dim_err, Error, Result};
use crate::qkernel::linalg::{
    apply_on_wires, embed_on_wires, identity, kron_vec, permute_wires, zero,
};
use crate::qkernel::measure::project_out;
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::{PureState, UnitaryOp};
use crate::scalar::{CMatrix, CVector, Real};
use crate::uqt::basis::BellBasis;
use crate::uqt::program::{conjugated, StoredProgram, SymmetricFactors};

/// Upper bound on repeat-until-success trials before giving up.
pub const MAX_TRIALS: usize = 1_000_000;

/// Largest Hilbert-space dimension for which a dense composition unitary is built.
pub const MAX_DENSE_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ByproductStrategy {
    /// Discard and retry with fresh copies until the trivial outcome.
    RepeatUntilSuccess,
    /// One measurement, then the stored correction `U2 σ_k U2†`.
    CorrectionTable,
    /// Two rounds through the symmetric factors of `U2`.
    SymmetricPair,
}

impl ByproductStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::RepeatUntilSuccess => "repeat-until-success",
            Self::CorrectionTable => "correction-table",
            Self::SymmetricPair => "symmetric-pair",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "repeat-until-success" | "rus" => Self::RepeatUntilSuccess,
            "correction-table" | "table" => Self::CorrectionTable,
            "symmetric-pair" | "symmetric" => Self::SymmetricPair,
            _ => return None,
        })
    }
}

/// Result of one Bell measurement on a pair of wires.
#[derive(Debug, Clone)]
pub struct PairOutcome<R: Real> {
    pub k: usize,
    pub probability: f64,
    /// Remaining wires in their original order.
    pub state: PureState<R>,
}

fn check_pair<R: Real>(
    joint: &PureState<R>,
    a: usize,
    b: usize,
    basis: &BellBasis<R>,
) -> Result<()> {
    let dims = joint.dims();
    if a >= dims.len() || b >= dims.len() || a == b {
        return Err(Error::Argument(format!("invalid wire pair ({a}, {b})")));
    }
    if dims[a] != basis.side_dim() || dims[b] != basis.side_dim() {
        return dim_err(format!(
            "wires of dimension ({}, {}) for a basis on {}",
            dims[a],
            dims[b],
            basis.side_dim()
        ));
    }
    Ok(())
}

fn branches<R: Real>(
    joint: &PureState<R>,
    a: usize,
    b: usize,
    basis: &BellBasis<R>,
) -> Result<Vec<CVector<R>>> {
    check_pair(joint, a, b, basis)?;
    (0..basis.len())
        .map(|k| project_out(joint, &[a, b], basis.vector(k)))
        .collect()
}

/// Exact outcome probabilities; encoded bases append the complement.
pub fn bell_probabilities<R: Real>(
    joint: &PureState<R>,
    a: usize,
    b: usize,
    basis: &BellBasis<R>,
) -> Result<Vec<R>> {
    let mut p: Vec<R> = branches(joint, a, b, basis)?
        .iter()
        .map(|v| v.norm_squared())
        .collect();
    if basis.is_encoded() {
        let total = p.iter().fold(R::zero(), |s, x| s + *x);
        p.push((R::one() - total).max(R::zero()));
    }
    Ok(p)
}

pub fn bell_measure_pair<R: Real>(
    joint: &PureState<R>,
    a: usize,
    b: usize,
    basis: &BellBasis<R>,
    rng: &mut RngStream,
) -> Result<PairOutcome<R>> {
    let br = branches(joint, a, b, basis)?;
    let mut weights: Vec<f64> = br.iter().map(|v| v.norm_squared().as_f64()).collect();
    if basis.is_encoded() {
        let total: f64 = weights.iter().sum();
        weights.push((1.0 - total).max(0.0));
    }
    let k = rng.sample_index(&weights);
    if k == br.len() {
        return Err(Error::Precondition(
            "Bell measurement left the code space".into(),
        ));
    }
    let rest: Vec<usize> = (0..joint.dims().len())
        .filter(|&i| i != a && i != b)
        .map(|i| joint.dims()[i])
        .collect();
    let state = PureState::normalized(br[k].clone(), rest)?;
    Ok(PairOutcome {
        k,
        probability: weights[k],
        state,
    })
}

/// A composed program and how it was obtained.
#[derive(Debug, Clone)]
pub struct Composition<R: Real> {
    pub program: StoredProgram<R>,
    /// Measurement rounds performed (each consumes one copy of every input).
    pub shots_used: usize,
    pub outcomes: Vec<usize>,
}

fn pair_state<R: Real>(a: &ChoiState<R>, b: &ChoiState<R>) -> PureState<R> {
    let d1 = a.d();
    let d2 = b.d();
    let v = kron_vec(
        a.amplitudes().expect("rank one"),
        b.amplitudes().expect("rank one"),
    );
    PureState::from_parts_unchecked(v, vec![d1, d1, d2, d2])
}

/// Head₁–tail₂ round; returns the outcome and `(U2 σ_k† U1 ⊗ I)|ω⟩` on (head₂, tail₁).
fn head_tail_round<R: Real>(
    first: &ChoiState<R>,
    second: &ChoiState<R>,
    basis: &BellBasis<R>,
    rng: &mut RngStream,
) -> Result<(usize, CVector<R>)> {
    let joint = pair_state(first, second);
    let out = bell_measure_pair(&joint, 0, 3, basis, rng)?;
    let d = first.d();
    // remaining (tail₁, head₂) → (head₂, tail₁)
    let v = permute_wires(out.state.amplitudes(), &[d, d], &[1, 0])?;
    Ok((out.k, v))
}

/// Head₁–head_S round; returns `(Sᵗ σ_k† U1 ⊗ I)|ω⟩` on (tail_S, tail₁).
fn head_head_round<R: Real>(
    first: &CVector<R>,
    s: &ChoiState<R>,
    basis: &BellBasis<R>,
    rng: &mut RngStream,
) -> Result<(usize, CVector<R>)> {
    let d = s.d();
    let joint = PureState::from_parts_unchecked(
        kron_vec(first, s.amplitudes().expect("rank one")),
        vec![d, d, d, d],
    );
    let out = bell_measure_pair(&joint, 0, 2, basis, rng)?;
    let v = permute_wires(out.state.amplitudes(), &[d, d], &[1, 0])?;
    Ok((out.k, v))
}

fn on_head<R: Real>(v: &CVector<R>, d: usize, op: &CMatrix<R>) -> Result<CVector<R>> {
    apply_on_wires(v, &[d, d], op, &[0])
}

fn finish<R: Real>(
    v: CVector<R>,
    p1: &StoredProgram<R>,
    p2: &StoredProgram<R>,
    shots_used: usize,
    outcomes: Vec<usize>,
) -> Result<Composition<R>> {
    let d = p1.d();
    let v = v.unscale(v.norm());
    let choi = ChoiState::from_amplitudes(v, d, R::default_tolerance() * R::of(100.0))?;
    let mut program = StoredProgram::from_choi(choi)?;
    if p1.has_classical_data() && p2.has_classical_data() {
        program = program.with_classical_data();
    }
    let desc = match (p1.description(), p2.description()) {
        (Some(a), Some(b)) => Some(a.then(b)?),
        _ => None,
    };
    Ok(Composition {
        program: program.with_description(desc),
        shots_used,
        outcomes,
    })
}

/// `|ω_{U1}⟩, |ω_{U2}⟩ ↦ |ω_{U2 U1}⟩`.
pub fn compose<R: Real>(
    p1: &StoredProgram<R>,
    p2: &StoredProgram<R>,
    strategy: ByproductStrategy,
    rng: &mut RngStream,
) -> Result<Composition<R>> {
    let d = p1.d();
    if p2.d() != d {
        return dim_err(format!(
            "cannot compose programs of dimension {d} and {}",
            p2.d()
        ));
    }
    let basis = p2.bell_basis();
    match strategy {
        ByproductStrategy::RepeatUntilSuccess => {
            let mut outcomes = Vec::new();
            for trial in 1..=MAX_TRIALS {
                let (k, v) = head_tail_round(p1.choi(), p2.choi(), &basis, rng)?;
                outcomes.push(k);
                if k == 0 {
                    return finish(v, p1, p2, trial, outcomes);
                }
            }
            Err(Error::Estimation(format!(
                "no trivial outcome within {MAX_TRIALS} trials"
            )))
        }
        ByproductStrategy::CorrectionTable => {
            let table_ready = p2.correction_table()?;
            debug_assert_eq!(table_ready.len() + 1, basis.len());
            let (k, v) = head_tail_round(p1.choi(), p2.choi(), &basis, rng)?;
            let v = on_head(&v, d, &p2.correction(k)?)?;
            finish(v, p1, p2, 1, vec![k])
        }
        ByproductStrategy::SymmetricPair => {
            let f = p2.symmetric_factors()?.clone();
            let mut v = p1.choi().amplitudes().expect("rank one").clone();
            let mut outcomes = Vec::new();
            let rounds: Vec<&UnitaryOp<R>> = if f.is_single() {
                vec![&f.s1]
            } else {
                vec![&f.s2, &f.s1]
            };
            for s in rounds {
                let resource = ChoiState::of_unitary(s);
                let (k, out) = head_head_round(&v, &resource, &basis, rng)?;
                outcomes.push(k);
                v = on_head(&out, d, &conjugated(s.matrix(), basis.sigma(k)))?;
            }
            finish(v, p1, p2, 1, outcomes)
        }
    }
}

/// Coherent composition: Bell rotations `B†` (with `B|k⟩ = |ω_{σ_k}⟩`) turn
/// the measured pairs into outcome registers that control the corrections.
/// Inputs are `|ω_{U1}⟩` followed by the factor resources listed in
/// [`CompositionUnitary::resources`]; the result appears on `output`
/// (head, tail) and every other wire ends in a product with it.
#[derive(Debug, Clone)]
pub struct CompositionUnitary<R: Real> {
    pub unitary: UnitaryOp<R>,
    pub dims: Vec<usize>,
    pub output: [usize; 2],
    resources: Vec<CVector<R>>,
}

impl<R: Real> CompositionUnitary<R> {
    /// Choi amplitudes of the factor programs, in wire order after `|ω_{U1}⟩`.
    pub fn resources(&self) -> &[CVector<R>] {
        &self.resources
    }

    /// Full input vector for a given first program.
    pub fn input(&self, p1: &StoredProgram<R>) -> Result<CVector<R>> {
        let d = self.dims[0];
        if p1.d() != d {
            return dim_err(format!(
                "program of dimension {} for a {d}-level composition",
                p1.d()
            ));
        }
        let mut v = p1.choi().amplitudes().expect("rank one").clone();
        for r in &self.resources {
            v = kron_vec(&v, r);
        }
        Ok(v)
    }

    /// Runs the unitary and returns the reduced state on the output wires.
    pub fn apply(&self, p1: &StoredProgram<R>) -> Result<ChoiState<R>> {
        let out = self.unitary.matrix() * self.input(p1)?;
        let d = self.dims[0];
        let mut perm = self.output.to_vec();
        perm.extend((0..self.dims.len()).filter(|w| !self.output.contains(w)));
        let moved = permute_wires(&out, &self.dims, &perm)?;
        let sorted: Vec<usize> = perm.iter().map(|&w| self.dims[w]).collect();
        let rho = crate::qkernel::linalg::partial_trace_pure(&moved, &sorted, &[0, 1])?;
        ChoiState::from_matrix(rho, d, R::default_tolerance() * R::of(100.0))
    }
}

fn bell_rotation<R: Real>(basis: &BellBasis<R>) -> CMatrix<R> {
    let n = basis.len();
    let mut b = CMatrix::zeros(n, n);
    for k in 0..n {
        b.set_column(k, basis.vector(k));
    }
    b.adjoint()
}

fn controlled_corrections<R: Real>(s: &CMatrix<R>, basis: &BellBasis<R>) -> CMatrix<R> {
    let d = basis.d();
    let n = basis.len();
    let mut m = CMatrix::from_element(n * d, n * d, zero());
    for k in 0..n {
        let c = conjugated(s, basis.sigma(k));
        m.view_mut((k * d, k * d), (d, d)).copy_from(&c);
    }
    m
}

pub fn composition_unitary<R: Real>(
    factors: &SymmetricFactors<R>,
) -> Result<CompositionUnitary<R>> {
    let d = factors.s1.dim();
    let basis = BellBasis::default_for(d);
    let b = bell_rotation(&basis);
    // wires: (h1, t1) then one (h_S, t_S) pair per round
    let rounds: Vec<&UnitaryOp<R>> = if factors.is_single() {
        vec![&factors.s1]
    } else {
        vec![&factors.s2, &factors.s1]
    };
    let wires = 2 + 2 * rounds.len();
    let dims = vec![d; wires];
    let total = d.pow(wires as u32);
    if total > MAX_DENSE_DIM {
        return Err(Error::Configuration(format!(
            "dense composition unitary of dimension {total} exceeds {MAX_DENSE_DIM}"
        )));
    }
    let mut u = identity::<R>(total);
    let mut head = 0;
    let mut resources = Vec::new();
    for (r, s) in rounds.iter().enumerate() {
        let (hs, ts) = (2 + 2 * r, 3 + 2 * r);
        u = embed_on_wires(&dims, &b, &[head, hs])? * u;
        let corr = controlled_corrections(s.matrix(), &basis);
        u = embed_on_wires(&dims, &corr, &[head, hs, ts])? * u;
        resources.push(
            ChoiState::of_unitary(s)
                .amplitudes()
                .expect("rank one")
                .clone(),
        );
        head = ts;
    }
    Ok(CompositionUnitary {
        unitary: UnitaryOp::with_tolerance(u, R::default_tolerance() * R::of(100.0))?,
        dims,
        output: [head, 1],
        resources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::choi::vectorize_single;
    use crate::qkernel::gates;
    use crate::qkernel::linalg::{kron, unitarity_residual};
    use crate::qkernel::random::haar_unitary;
    use crate::uqt::program::symmetric_decompose;

    fn prog(m: CMatrix<f64>) -> StoredProgram<f64> {
        StoredProgram::from_unitary(UnitaryOp::new(m).unwrap())
    }

    #[test]
    fn pair_measurement_statistics_and_byproducts() {
        let mut rng = RngStream::new(1, 1);
        for d in [2, 3, 4] {
            let u1 = haar_unitary::<f64>(d, &mut rng);
            let u2 = haar_unitary::<f64>(d, &mut rng);
            let joint = pair_state(&ChoiState::of_unitary(&u1), &ChoiState::of_unitary(&u2));
            let basis = BellBasis::default_for(d);
            let p = bell_probabilities(&joint, 0, 3, &basis).unwrap();
            for pk in &p {
                assert!((pk - 1.0 / (d * d) as f64).abs() <= 1e-12);
            }
            // each branch, renormalised, is |ω_{U2 σ_k† U1}⟩ (direct contraction oracle)
            for k in 0..basis.len() {
                let br = project_out(&joint, &[0, 3], basis.vector(k)).unwrap();
                let br = permute_wires(&br, &[d, d], &[1, 0]).unwrap();
                let expect =
                    vectorize_single(&(u2.matrix() * basis.sigma(k).adjoint() * u1.matrix()));
                let f = expect.dotc(&br).norm_sqr() / br.norm_squared();
                assert!(f >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn identity_programs_compose_to_identity() {
        let mut rng = RngStream::new(0, 0);
        let id = StoredProgram::<f64>::identity(2);
        for s in [
            ByproductStrategy::RepeatUntilSuccess,
            ByproductStrategy::CorrectionTable,
            ByproductStrategy::SymmetricPair,
        ] {
            let c = compose(&id, &id, s, &mut rng).unwrap();
            assert!(c.program.fidelity_with(&identity(2)) >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn h_then_t_gives_th() {
        let mut rng = RngStream::new(42, 0);
        let th = gates::t::<f64>() * gates::h::<f64>();
        for s in [
            ByproductStrategy::RepeatUntilSuccess,
            ByproductStrategy::CorrectionTable,
            ByproductStrategy::SymmetricPair,
        ] {
            let c = compose(&prog(gates::h()), &prog(gates::t()), s, &mut rng).unwrap();
            assert!(c.program.fidelity_with(&th) >= 1.0 - 1e-10, "{s:?}");
        }
    }

    #[test]
    fn random_su4_all_strategies() {
        let mut rng = RngStream::new(7, 3);
        for _ in 0..5 {
            let u1 = haar_unitary::<f64>(4, &mut rng);
            let u2 = haar_unitary::<f64>(4, &mut rng);
            let target = u2.matrix() * u1.matrix();
            let (p1, p2) = (
                StoredProgram::from_unitary(u1),
                StoredProgram::from_unitary(u2),
            );
            for s in [
                ByproductStrategy::RepeatUntilSuccess,
                ByproductStrategy::CorrectionTable,
                ByproductStrategy::SymmetricPair,
            ] {
                let c = compose(&p1, &p2, s, &mut rng).unwrap();
                assert!(c.program.fidelity_with(&target) >= 1.0 - 1e-10, "{s:?}");
            }
        }
    }

    #[test]
    fn missing_classical_data_is_a_configuration_error() {
        let mut rng = RngStream::new(0, 0);
        let p = prog(gates::h());
        let opaque = StoredProgram::from_choi(p.choi().clone()).unwrap();
        for s in [
            ByproductStrategy::CorrectionTable,
            ByproductStrategy::SymmetricPair,
        ] {
            assert!(matches!(
                compose(&p, &opaque, s, &mut rng),
                Err(Error::Configuration(_))
            ));
        }
        // heralding needs no classical data
        assert!(compose(&p, &opaque, ByproductStrategy::RepeatUntilSuccess, &mut rng).is_ok());
        // factors alone suffice for the symmetric strategy
        let f = symmetric_decompose(p.unitary()).unwrap();
        let given = StoredProgram::from_choi(p.choi().clone())
            .unwrap()
            .with_factors(f)
            .unwrap();
        assert!(compose(&p, &given, ByproductStrategy::SymmetricPair, &mut rng).is_ok());
    }

    #[test]
    fn composition_unitary_identity_swaps_program_into_place() {
        let f = symmetric_decompose(&UnitaryOp::<f64>::identity(2)).unwrap();
        let cu = composition_unitary(&f).unwrap();
        assert!(unitarity_residual(cu.unitary.matrix()) <= 1e-10);
        let mut rng = RngStream::new(3, 0);
        let u1 = haar_unitary::<f64>(2, &mut rng);
        let out = cu.apply(&StoredProgram::from_unitary(u1.clone())).unwrap();
        let expect = vectorize_single(u1.matrix());
        assert!(
            out.fidelity(&ChoiState::from_amplitudes(expect, 2, 1e-10).unwrap()) >= 1.0 - 1e-10
        );
    }

    #[test]
    fn composition_unitary_general_qubit_case() {
        let mut rng = RngStream::new(11, 0);
        let u1 = haar_unitary::<f64>(2, &mut rng);
        let u2 = haar_unitary::<f64>(2, &mut rng);
        let f = symmetric_decompose(&u2).unwrap();
        assert!(!f.is_single());
        let cu = composition_unitary(&f).unwrap();
        assert!(unitarity_residual(cu.unitary.matrix()) <= 1e-10);
        let out = cu.apply(&StoredProgram::from_unitary(u1.clone())).unwrap();
        let target = vectorize_single(&(u2.matrix() * u1.matrix()));
        let t = target.dotc(&(out.matrix() * &target)).re;
        assert!(t >= 1.0 - 1e-10);
    }

    #[test]
    fn composition_unitary_cz_after_h() {
        let cz = UnitaryOp::new(gates::cz::<f64>()).unwrap();
        let f = symmetric_decompose(&cz).unwrap();
        let cu = composition_unitary(&f).unwrap();
        let u1 = kron(&gates::h::<f64>(), &identity(2));
        let out = cu.apply(&prog(u1.clone())).unwrap();
        let target = vectorize_single(&(gates::cz::<f64>() * u1));
        let rho = &target * target.adjoint();
        assert!(crate::qkernel::linalg::trace_distance(out.matrix(), &rho) <= 1e-9);
        let big = composition_unitary(
            &symmetric_decompose(&haar_unitary::<f64>(4, &mut RngStream::new(0, 0))).unwrap(),
        );
        assert!(matches!(big, Err(Error::Configuration(_))));
    }

    #[test]
    fn correction_table_is_deterministic() {
        let mut rng = RngStream::new(5, 5);
        let p1 = StoredProgram::from_unitary(haar_unitary::<f64>(2, &mut rng));
        let p2 = StoredProgram::from_unitary(haar_unitary::<f64>(2, &mut rng));
        let first = compose(&p1, &p2, ByproductStrategy::CorrectionTable, &mut rng).unwrap();
        for _ in 0..20 {
            let c = compose(&p1, &p2, ByproductStrategy::CorrectionTable, &mut rng).unwrap();
            assert!(c.program.choi().fidelity(first.program.choi()) >= 1.0 - 1e-10);
        }
    }
}
