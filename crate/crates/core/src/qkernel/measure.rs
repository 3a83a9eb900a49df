//! Projective measurement with seeded sampling.

use crate::error::{dim_err, Error, Result};
use crate::qkernel::linalg::{hermiticity_residual, identity, max_abs_diff};
use crate::qkernel::rng::RngStream;
use crate::qkernel::state::{DensityOperator, PureState};
use crate::scalar::{CMatrix, CVector, Real};

/// States that can be measured with a projector of their full dimension.
pub trait Measurable<R: Real>: Sized {
    fn dimension(&self) -> usize;
    /// Born weight `tr(P ρ)`.
    fn born_weight(&self, projector: &CMatrix<R>) -> R;
    /// `PρP / tr(Pρ)`.
    fn collapse(&self, projector: &CMatrix<R>, weight: R) -> Self;
}

impl<R: Real> Measurable<R> for PureState<R> {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn born_weight(&self, projector: &CMatrix<R>) -> R {
        (projector * self.amplitudes()).norm_squared()
    }

    fn collapse(&self, projector: &CMatrix<R>, weight: R) -> Self {
        let v = (projector * self.amplitudes()).unscale(weight.sqrt());
        PureState::from_parts_unchecked(v, self.dims().to_vec())
    }
}

impl<R: Real> Measurable<R> for DensityOperator<R> {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn born_weight(&self, projector: &CMatrix<R>) -> R {
        crate::qkernel::linalg::trace(&(projector * self.matrix())).re
    }

    fn collapse(&self, projector: &CMatrix<R>, weight: R) -> Self {
        let m = (projector * self.matrix() * projector).unscale(weight);
        DensityOperator::from_parts_unchecked(m, self.dims().to_vec())
    }
}

/// Result of a sampled measurement.
#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub index: usize,
    pub probability: f64,
    pub state: S,
}

/// Checks that `projectors` form a complete set of orthogonal projectors.
pub fn validate_projectors<R: Real>(projectors: &[CMatrix<R>], dim: usize, tol: R) -> Result<()> {
    if projectors.is_empty() {
        return Err(Error::Argument("empty projector set".into()));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for (k, p) in projectors.iter().enumerate() {
        if p.nrows() != dim || p.ncols() != dim {
            return dim_err(format!(
                "projector {k} is {}x{}, state has dimension {dim}",
                p.nrows(),
                p.ncols()
            ));
        }
        if hermiticity_residual(p) > tol || max_abs_diff(&(p * p), p) > tol {
            return Err(Error::Argument(format!(
                "element {k} is not a Hermitian idempotent"
            )));
        }
        sum += p;
    }
    if max_abs_diff(&sum, &identity(dim)) > tol {
        return Err(Error::Argument(
            "projectors do not sum to the identity".into(),
        ));
    }
    Ok(())
}

/// Exact outcome probabilities `tr(P_k ρ)`.
pub fn probabilities<R: Real, S: Measurable<R>>(state: &S, projectors: &[CMatrix<R>]) -> Vec<R> {
    projectors
        .iter()
        .map(|p| state.born_weight(p).max(R::zero()))
        .collect()
}

/// Samples outcome `k` with probability `tr(P_k ρ)` and returns the collapsed state.
pub fn measure<R: Real, S: Measurable<R>>(
    state: &S,
    projectors: &[CMatrix<R>],
    rng: &mut RngStream,
) -> Result<Outcome<S>> {
    let tol = R::default_tolerance();
    validate_projectors(projectors, state.dimension(), tol)?;
    let probs = probabilities(state, projectors);
    if probs.iter().all(|p| *p <= tol) {
        return Err(Error::Numerical("all outcome probabilities vanish".into()));
    }
    let weights: Vec<f64> = probs.iter().map(|p| p.as_f64()).collect();
    let index = rng.sample_index(&weights);
    let w = probs[index];
    Ok(Outcome {
        index,
        probability: w.as_f64(),
        state: state.collapse(&projectors[index], w),
    })
}

/// Unnormalised branches `(⟨v_k| ⊗ I)|ψ⟩` of a rank-one measurement on `wires`,
/// with the measured wires removed. `effects` are the kets `v_k` over the
/// measured wires (in the listed order).
pub fn project_out<R: Real>(
    state: &PureState<R>,
    wires: &[usize],
    effect: &CVector<R>,
) -> Result<CVector<R>> {
    let dims = state.dims();
    let sub: usize = wires.iter().map(|&w| dims[w]).product();
    if effect.len() != sub {
        return dim_err(format!(
            "effect of length {} on wires of dimension {sub}",
            effect.len()
        ));
    }
    // Bring the measured wires to the front, then contract.
    let mut perm: Vec<usize> = wires.to_vec();
    perm.extend((0..dims.len()).filter(|i| !wires.contains(i)));
    let moved = state.permuted(&perm)?;
    let rest = state.dim() / sub;
    let amps = moved.amplitudes();
    let mut out = CVector::zeros(rest);
    for (k, e) in effect.iter().enumerate() {
        let ec = e.conj();
        if ec.re == R::zero() && ec.im == R::zero() {
            continue;
        }
        for r in 0..rest {
            out[r] += ec * amps[k * rest + r];
        }
    }
    Ok(out)
}

/// Measures the listed wires in the computational basis, keeping them
/// (collapsed) in the returned state. Returns the observed digits.
pub fn measure_computational<R: Real>(
    state: &PureState<R>,
    wires: &[usize],
    rng: &mut RngStream,
) -> Result<(Vec<usize>, f64, PureState<R>)> {
    let dims = state.dims().to_vec();
    let sub_dims: Vec<usize> = wires.iter().map(|&w| dims[w]).collect();
    let sub: usize = sub_dims.iter().product();
    let st = crate::qkernel::linalg::strides(&dims);
    let sub_st = crate::qkernel::linalg::strides(&sub_dims);
    let mut weights = vec![0.0f64; sub];
    let mut labels = vec![0usize; state.dim()];
    for (idx, a) in state.amplitudes().iter().enumerate() {
        let mut label = 0;
        for (k, &w) in wires.iter().enumerate() {
            label += ((idx / st[w]) % dims[w]) * sub_st[k];
        }
        labels[idx] = label;
        weights[label] += a.norm_sqr().as_f64();
    }
    let pick = rng.sample_index(&weights);
    let p = weights[pick];
    if p <= 0.0 {
        return Err(Error::Numerical("all outcome probabilities vanish".into()));
    }
    let norm = R::of(p.sqrt());
    let amps = CVector::from_iterator(
        state.dim(),
        state.amplitudes().iter().zip(&labels).map(|(a, &l)| {
            if l == pick {
                a.unscale(norm)
            } else {
                crate::qkernel::linalg::zero()
            }
        }),
    );
    let digits = sub_dims
        .iter()
        .zip(&sub_st)
        .map(|(&d, &s)| (pick / s) % d)
        .collect();
    Ok((digits, p, PureState::from_parts_unchecked(amps, dims)))
}

/// Drops wires that are in a known computational basis state.
pub fn drop_basis_wires<R: Real>(
    state: &PureState<R>,
    wires: &[usize],
    digits: &[usize],
) -> Result<PureState<R>> {
    let dims = state.dims();
    let mut effect = CVector::zeros(wires.iter().map(|&w| dims[w]).product());
    let sub_dims: Vec<usize> = wires.iter().map(|&w| dims[w]).collect();
    let sub_st = crate::qkernel::linalg::strides(&sub_dims);
    let idx: usize = digits.iter().zip(&sub_st).map(|(d, s)| d * s).sum();
    effect[idx] = crate::scalar::re(R::one());
    let v = project_out(state, wires, &effect)?;
    let rest: Vec<usize> = (0..dims.len())
        .filter(|i| !wires.contains(i))
        .map(|i| dims[i])
        .collect();
    PureState::normalized(v, rest)
}
