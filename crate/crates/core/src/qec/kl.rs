//! Knill–Laflamme and detection conditions, and recovery construction.

use crate::error::{Error, Result};
use crate::qkernel::linalg::{eigh, identity, max_abs, sqrt_psd, trace};
use crate::qkernel::state::KrausChannel;
use crate::scalar::{c, CMatrix, Real};

use super::code::{Code, ErrorSet};

/// Outcome of a Knill–Laflamme check.
#[derive(Debug, Clone, PartialEq)]
pub struct KlReport<R: Real> {
    pub satisfied: bool,
    /// `c_ij` with `P E_i† E_j P ≈ c_ij P`.
    pub coefficients: CMatrix<R>,
    /// `‖P E_i† E_j P − c_ij P‖_max` per pair.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
}

/// Tests `P E_i† E_j P = c_ij P` for every pair.
pub fn check_kl<R: Real>(code: &Code<R>, errors: &ErrorSet<R>) -> Result<KlReport<R>> {
    check_kl_tol(code, errors, R::default_tolerance() * R::of(100.0))
}

pub fn check_kl_tol<R: Real>(code: &Code<R>, errors: &ErrorSet<R>, tol: R) -> Result<KlReport<R>> {
    errors.check_code(code)?;
    let p = code.projector();
    let kdim = R::count(code.logical_dim());
    // P E_j P, reused as (E_i P)† (E_j P)
    let ep: Vec<CMatrix<R>> = errors.ops().iter().map(|e| e * p).collect();
    let m = errors.len();
    let mut coefficients = CMatrix::zeros(m, m);
    let mut residuals = vec![vec![0.0; m]; m];
    let mut max_residual = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let block = ep[i].adjoint() * &ep[j];
            let cij = trace(&block).unscale(kdim);
            let r = max_abs(&(block - p * cij)).as_f64();
            coefficients[(i, j)] = cij;
            residuals[i][j] = r;
            max_residual = max_residual.max(r);
        }
    }
    Ok(KlReport {
        satisfied: max_residual <= tol.as_f64(),
        coefficients,
        residuals,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport<R: Real> {
    pub satisfied: bool,
    /// `e_i` with `P E_i P ≈ e_i P`.
    pub coefficients: Vec<crate::scalar::C<R>>,
    pub residuals: Vec<f64>,
}

/// Tests `P E_i P = e_i P` for every error.
pub fn check_detection<R: Real>(
    code: &Code<R>,
    errors: &ErrorSet<R>,
) -> Result<DetectionReport<R>> {
    errors.check_code(code)?;
    let tol = (R::default_tolerance() * R::of(100.0)).as_f64();
    let p = code.projector();
    let kdim = R::count(code.logical_dim());
    let mut coefficients = Vec::new();
    let mut residuals = Vec::new();
    for e in errors.ops() {
        let block = p * e * p;
        let ei = trace(&block).unscale(kdim);
        residuals.push(max_abs(&(block - p * ei)).as_f64());
        coefficients.push(ei);
    }
    Ok(DetectionReport {
        satisfied: residuals.iter().all(|r| *r <= tol),
        coefficients,
        residuals,
    })
}

/// Recovery Kraus operators `R_k = P F_k† / √d_k`, plus the element that
/// completes them to a trace-preserving map on the complement of their
/// support.
#[derive(Debug, Clone)]
pub struct Recovery<R: Real> {
    pub kraus: Vec<CMatrix<R>>,
    pub completion: Option<CMatrix<R>>,
}

impl<R: Real> Recovery<R> {
    pub fn channel(&self) -> Result<KrausChannel<R>> {
        let mut ops = self.kraus.clone();
        ops.extend(self.completion.clone());
        KrausChannel::with_tolerance(ops, R::default_tolerance() * R::of(1e3))
    }
}

/// Diagonalises `[c_ij] = W diag(d_k) W†` and builds the recovery from
/// `F_k = Σ_i W_ik E_i`.
pub fn build_recovery<R: Real>(code: &Code<R>, errors: &ErrorSet<R>) -> Result<Recovery<R>> {
    let report = check_kl(code, errors)?;
    if !report.satisfied {
        return Err(Error::Condition {
            residual: report.max_residual,
            residuals: report.residuals,
        });
    }
    let (vals, w) = eigh(&report.coefficients);
    let top = vals.iter().fold(R::zero(), |m, v| m.max(*v));
    let cutoff = top * R::of(1e-12);
    let p = code.projector();
    let dim = code.physical_dim();
    let mut kraus = Vec::new();
    for (k, dk) in vals.iter().enumerate() {
        if *dk <= cutoff {
            continue;
        }
        let f = errors
            .ops()
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(dim, dim), |acc, (i, e)| acc + e * w[(i, k)]);
        kraus.push((p * f.adjoint()).unscale(dk.sqrt()));
    }
    let covered = kraus
        .iter()
        .fold(CMatrix::zeros(dim, dim), |acc, r| acc + r.adjoint() * r);
    let rest = identity::<R>(dim) - covered;
    let completion = (max_abs(&rest) > R::default_tolerance()).then(|| sqrt_psd(&rest));
    Ok(Recovery { kraus, completion })
}

/// `Σ_i E_i ρ E_i†` rescaled to be trace preserving when `Σ E_i†E_i = λ I`.
pub fn error_channel<R: Real>(errors: &ErrorSet<R>) -> Result<KrausChannel<R>> {
    let d = errors.dim();
    let s = errors
        .ops()
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
    let lambda = trace(&s).re / R::count(d);
    if max_abs(&(s - identity::<R>(d) * c::<R>(lambda.as_f64(), 0.0)))
        > R::default_tolerance() * R::of(100.0)
    {
        return Err(Error::NotCptp { residual: f64::NAN });
    }
    let scale = lambda.sqrt();
    KrausChannel::new(errors.ops().iter().map(|e| e.unscale(scale)).collect())
}
