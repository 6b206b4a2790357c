use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ClassSample, RELATIVE_ZERO};
use crate::error::{Result, SpikeError};

/// Eigenpairs of the dual sample covariance `S_D`.
///
/// Only the first `n − 1` pairs are kept: `S_D · 1 = 0`, so the last
/// eigenvalue is zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSpectrum {
    /// `λ̂_(1) ≥ … ≥ λ̂_(n−1) ≥ 0`.
    pub eigvals: Vec<f64>,
    /// Unit eigenvectors `û_(r)` of length `n`, in the same order.
    pub eigvecs_dual: Vec<DVector<f64>>,
    /// `tr(S_D)`, equal to `tr(S)`.
    pub trace_sd: f64,
}

impl DualSpectrum {
    /// Sample size `n` the spectrum was computed from.
    pub fn n(&self) -> usize {
        self.eigvals.len() + 1
    }
}

/// `S_D = (X − X̄)ᵀ(X − X̄)/(n − 1)`.
///
/// Built from the centered `p × n` data through one Gram product; the result
/// is exactly symmetric.
pub fn dual_covariance(sample: &ClassSample) -> DMatrix<f64> {
    let xc = sample.centered();
    gram_of_centered(&xc)
}

pub(crate) fn gram_of_centered(xc: &DMatrix<f64>) -> DMatrix<f64> {
    let n = xc.ncols();
    let mut sd = xc.tr_mul(xc);
    sd /= n as f64 - 1.0;
    symmetrize(&mut sd);
    sd
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Symmetric eigendecomposition of a dual covariance.
///
/// Eigenvalues are returned nonincreasing; values below
/// `RELATIVE_ZERO · λ̂_(1)` (including small negatives from rounding) are
/// clamped to zero. Eigenvectors are taken in solver order for ties.
pub fn eigen_dual(sd: &DMatrix<f64>) -> Result<DualSpectrum> {
    let n = sd.nrows();
    if n != sd.ncols() {
        return Err(SpikeError::InvalidData(format!(
            "dual covariance must be square, got {}x{}",
            n,
            sd.ncols()
        )));
    }
    if n < 2 {
        return Err(SpikeError::InvalidData("dual covariance needs n >= 2".into()));
    }
    let scale = sd.amax();
    if !scale.is_finite() {
        return Err(SpikeError::Numeric(
            "dual covariance has non-finite entries (overflow in the gram matrix)".into(),
        ));
    }
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (sd[(i, j)] - sd[(j, i)]).abs())
        .fold(0.0_f64, f64::max);
    if asym > 1e-10 * scale.max(1.0) {
        return Err(SpikeError::InvalidData(format!(
            "dual covariance is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let trace_sd = sd.trace();

    let eig = SymmetricEigen::try_new(sd.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        SpikeError::Numeric(format!(
            "symmetric eigensolver did not converge (n = {n}, max |entry| = {scale:e}, \
             frobenius norm = {:e}, trace = {trace_sd:e})",
            sd.norm()
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps solver order for exact ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lead = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = RELATIVE_ZERO * lead;
    let mut eigvals = Vec::with_capacity(n - 1);
    let mut eigvecs_dual = Vec::with_capacity(n - 1);
    for &idx in order.iter().take(n - 1) {
        let v = eig.eigenvalues[idx];
        eigvals.push(if v > cutoff { v } else { 0.0 });
        eigvecs_dual.push(eig.eigenvectors.column(idx).into_owned());
    }
    Ok(DualSpectrum {
        eigvals,
        eigvecs_dual,
        trace_sd,
    })
}
