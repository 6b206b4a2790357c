use nalgebra::DMatrix;

use super::{nr_eigenvalues, ClassSample, DualSpectrum, MIN_CLASS_SIZE, RELATIVE_ZERO};
use crate::error::{Result, SpikeError};

/// Cross-data-matrix spectrum of one class, with the derived ratio sequences.
///
/// Indices are zero-based: `psi_hat[0]` is `Ψ̂_(1)`, `tau_hat[0]` is `τ̂_(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdmSpectrum {
    /// `(⌈n/2⌉, n − ⌈n/2⌉)`.
    pub split_sizes: (usize, usize),
    /// Singular values `λ́_(r)` of the cross matrix, `r = 1..n₂−1`, nonincreasing.
    pub acute_eigvals: Vec<f64>,
    /// `Ψ̂_(r)` for `r = 1..n₂`; the last entry is exactly zero.
    pub psi_hat: Vec<f64>,
    /// `τ̂_(r) = Ψ̂_(r+1)/Ψ̂_(r)`, defined while `Ψ̂_(r) > 0`.
    pub tau_hat: Vec<f64>,
    /// Contribution ratios `ε̂_(r) = λ̃_(r)/tr(S)`, `r = 1..n−2`.
    pub eps_hat: Vec<f64>,
    /// Quadratic contribution ratios `η̂_(r) = λ́_(r)²/Ψ̂_(1)`.
    pub eta_hat: Vec<f64>,
    /// Selected spike count, once [`CdmSpectrum::select`] has run.
    pub k_hat: Option<usize>,
}

impl CdmSpectrum {
    /// Runs [`select_k`] and stores the result.
    pub fn select(&mut self, n: usize, gamma: impl Fn(usize) -> f64) -> usize {
        let k = select_k(self, n, gamma);
        self.k_hat = Some(k);
        k
    }

    /// `τ̃_(r) = τ̂_(r){1 + rγ(n)}`, the quantity compared against 1.
    pub fn tau_tilde(&self, n: usize, gamma: impl Fn(usize) -> f64) -> Vec<f64> {
        let g = gamma(n);
        self.tau_hat
            .iter()
            .enumerate()
            .map(|(i, t)| t * (1.0 + (i + 1) as f64 * g))
            .collect()
    }
}

/// `γ(n) = √(log n / n)`.
pub fn default_gamma(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).sqrt()
}

/// Cross-data-matrix spectrum using the sample's own dual spectrum for `ε̂`.
pub fn cdm_spectrum(sample: &ClassSample) -> Result<CdmSpectrum> {
    let spec = super::eigen_dual(&super::dual_covariance(sample))?;
    cdm_spectrum_with(sample, &spec)
}

/// Cross-data-matrix spectrum when the dual spectrum is already available.
///
/// Columns are split in their given order: the first `⌈n/2⌉` against the rest.
pub fn cdm_spectrum_with(sample: &ClassSample, spec: &DualSpectrum) -> Result<CdmSpectrum> {
    let n = sample.n();
    if n < MIN_CLASS_SIZE {
        return Err(SpikeError::InvalidData(format!(
            "cross-data-matrix split needs n >= {MIN_CLASS_SIZE}, got {n}"
        )));
    }
    if spec.n() != n {
        return Err(SpikeError::DimensionMismatch {
            expected: n,
            found: spec.n(),
        });
    }
    let n1 = n.div_ceil(2);
    let n2 = n - n1;
    let first: Vec<usize> = (0..n1).collect();
    let second: Vec<usize> = (n1..n).collect();
    let x1 = sample.select_columns(&first)?.centered();
    let x2 = sample.select_columns(&second)?.centered();

    let mut cross: DMatrix<f64> = x1.tr_mul(&x2);
    cross /= ((n1 - 1) as f64 * (n2 - 1) as f64).sqrt();
    let frob2 = cross.norm_squared();

    let mut sv: Vec<f64> = cross
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| {
            SpikeError::Numeric(format!(
                "singular value decomposition of the {n1}x{n2} cross matrix did not converge \
                 (frobenius norm {:e})",
                frob2.sqrt()
            ))
        })?
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    // rank(S_D(1)) <= n₂ − 1
    sv.truncate(n2 - 1);
    let lead = sv.first().copied().unwrap_or(0.0);
    for v in sv.iter_mut() {
        if *v <= RELATIVE_ZERO * lead {
            *v = 0.0;
        }
    }

    // Ψ̂_(1) is the Frobenius norm; later terms are tail sums of λ́², which
    // equal Ψ̂_(1) − Σ_{s<r} λ́_(s)² without the cancellation.
    let mut psi_hat = vec![0.0; n2];
    psi_hat[0] = frob2;
    let mut tail = 0.0;
    for r in (1..n2).rev() {
        if r < sv.len() {
            tail += sv[r] * sv[r];
        }
        psi_hat[r] = tail;
    }
    for r in 1..n2 {
        psi_hat[r] = psi_hat[r].min(psi_hat[r - 1]);
    }
    psi_hat[n2 - 1] = 0.0;

    let tau_hat: Vec<f64> = (0..n2 - 1)
        .take_while(|&r| psi_hat[r] > 0.0)
        .map(|r| psi_hat[r + 1] / psi_hat[r])
        .collect();

    let eta_hat: Vec<f64> = if frob2 > 0.0 {
        sv.iter().map(|s| s * s / frob2).collect()
    } else {
        vec![0.0; sv.len()]
    };
    let trace_s = spec.trace_sd;
    let eps_hat: Vec<f64> = nr_eigenvalues(spec)
        .into_iter()
        .map(|v| if trace_s > 0.0 { v / trace_s } else { 0.0 })
        .collect();

    Ok(CdmSpectrum {
        split_sizes: (n1, n2),
        acute_eigvals: sv,
        psi_hat,
        tau_hat,
        eps_hat,
        eta_hat,
        k_hat: None,
    })
}

/// Spike-count rule: the first `r ≥ 0` with `τ̂_(r+1){1 + (r+1)γ(n)} > 1`,
/// capped at `n₂ − 2`.
///
/// If `τ̂_(r+1)` is undefined because `Ψ̂_(r+1) = 0`, the rank is exhausted and
/// `r` is returned.
pub fn select_k(cdm: &CdmSpectrum, n: usize, gamma: impl Fn(usize) -> f64) -> usize {
    let g = gamma(n);
    let mut k_o = cdm.tau_hat.len();
    for (r, tau) in cdm.tau_hat.iter().enumerate() {
        if tau * (1.0 + (r + 1) as f64 * g) > 1.0 {
            k_o = r;
            break;
        }
    }
    k_o.min(cdm.split_sizes.1.saturating_sub(2))
}
