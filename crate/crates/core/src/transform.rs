//! Principal-component score estimation for the data transformation.
//!
//! New observations are scored with the noise-reduced directions,
//! `x̃₀,(r) = x₀ᵀh̃_(r)`. Training observations use leave-one-out style modified
//! dual vectors so the `‖x_j − μ‖²` term drops out of `x̃_j,(r)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpikeError};
use crate::spectra::{ClassSample, NrSpectrum};

/// Bias-corrected training scores for the leading `k` components of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct PcScores {
    /// `k × n` matrix of `x̃_j,(r)`.
    pub train_scores: DMatrix<f64>,
    /// Row means `x̄̃_(r)`.
    pub train_means: DVector<f64>,
}

impl PcScores {
    pub fn k(&self) -> usize {
        self.train_scores.nrows()
    }

    /// `Σ_{j<j'} x̃_j,(r) x̃_j',(r)` for each component.
    pub fn pair_sums(&self) -> Vec<f64> {
        self.train_scores
            .row_iter()
            .map(|row| {
                let mut acc = 0.0;
                let mut prefix = 0.0;
                for &v in row.iter() {
                    acc += prefix * v;
                    prefix += v;
                }
                acc
            })
            .collect()
    }
}

/// `x̃₀,(r) = x₀ᵀh̃_(r)` for `r = 1..k`.
pub fn score_new(x0: &DVector<f64>, nr: &NrSpectrum, k: usize) -> Result<DVector<f64>> {
    if k > nr.components() {
        return Err(SpikeError::Configuration(format!(
            "asked for {k} scores but only {} directions are available",
            nr.components()
        )));
    }
    if let Some(h) = nr.nr_dirs.first() {
        if h.len() != x0.len() {
            return Err(SpikeError::DimensionMismatch {
                expected: h.len(),
                found: x0.len(),
            });
        }
    }
    Ok(DVector::from_iterator(
        k,
        nr.nr_dirs.iter().take(k).map(|h| x0.dot(h)),
    ))
}

/// `û_j,(r)` for `j = 1..n`: `û_(r)` with entry `j` replaced by `−û_j(r)/(n−1)`.
pub fn modified_dual_vectors(u: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = u.len();
    let nm1 = n as f64 - 1.0;
    (0..n)
        .map(|j| {
            let mut v = u.clone();
            v[j] = -u[j] / nm1;
            v
        })
        .collect()
}

/// Explicit modified directions `h̃_j,(r) = (n−1)^{1/2}(X − X̄)û_j,(r) / {(n−2)λ̃_(r)^{1/2}}`.
///
/// `O(n²p)`; the scoring path in [`score_training`] never builds these.
pub fn modified_directions(sample: &ClassSample, nr: &NrSpectrum, r: usize) -> Result<Vec<DVector<f64>>> {
    let u = nr
        .dual_dirs
        .get(r)
        .ok_or_else(|| SpikeError::Configuration(format!("component {} has no direction", r + 1)))?;
    let n = sample.n();
    let lam = nr.nr_eigvals[r];
    let scale = (n as f64 - 1.0).sqrt() / ((n as f64 - 2.0) * lam.sqrt());
    let xc = sample.centered();
    Ok(modified_dual_vectors(u)
        .iter()
        .map(|v| (&xc * v) * scale)
        .collect())
}

/// Bias-corrected training scores `x̃_j,(r) = x_jᵀh̃_j,(r)` for `r = 1..k`.
///
/// `sd` is the dual covariance of `sample` and `nr` must carry at least `k`
/// oriented directions. With `M = Xᵀ(X − X̄)` every score of a component is
/// `c · (M_j·û − M_jj û_j · n/(n−1))`, so after the `O(pn)` pass for `M` the
/// remaining work is `O(n²)` per component.
pub fn score_training(
    sample: &ClassSample,
    sd: &DMatrix<f64>,
    nr: &NrSpectrum,
    k: usize,
) -> Result<PcScores> {
    let n = sample.n();
    if sd.nrows() != n || sd.ncols() != n {
        return Err(SpikeError::DimensionMismatch {
            expected: n,
            found: sd.nrows(),
        });
    }
    if k > nr.components() {
        return Err(SpikeError::Configuration(format!(
            "asked for {k} training scores but only {} directions are available",
            nr.components()
        )));
    }
    if let Some(r) = (0..k).find(|&r| nr.nr_eigvals[r] <= 0.0) {
        return Err(SpikeError::DegenerateSpike {
            component: r + 1,
            value: nr.nr_eigvals[r],
        });
    }
    let mean = sample.mean();
    let xc = sample.centered();
    let offsets = xc.tr_mul(&mean);
    Ok(scores_from_gram(sd, &offsets, nr, k))
}

/// Scores from `S_D` and `offsets_l = x̄ᵀ(x_l − x̄)`, using
/// `M[j,l] = (n−1)S_D[j,l] + offsets_l`.
pub(crate) fn scores_from_gram(
    sd: &DMatrix<f64>,
    offsets: &DVector<f64>,
    nr: &NrSpectrum,
    k: usize,
) -> PcScores {
    let n = sd.nrows();
    let nm1 = n as f64 - 1.0;
    let mut scores = DMatrix::zeros(k, n);
    for r in 0..k {
        let u = &nr.dual_dirs[r];
        let c = nm1.sqrt() / ((n as f64 - 2.0) * nr.nr_eigvals[r].sqrt());
        // (n−1)S_D û + 1·(offsetsᵀû)
        let sd_u = sd * u * nm1;
        let off_u = offsets.dot(u);
        for j in 0..n {
            let m_jj = nm1 * sd[(j, j)] + offsets[j];
            let full = sd_u[j] + off_u;
            scores[(r, j)] = c * (full - m_jj * u[j] * (n as f64) / nm1);
        }
    }
    let train_means = DVector::from_iterator(k, scores.row_iter().map(|row| row.mean()));
    PcScores {
        train_scores: scores,
        train_means,
    }
}
