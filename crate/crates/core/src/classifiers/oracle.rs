use nalgebra::DVector;

use super::distance::{project_out, LinearRule};
use super::{Decision, Method};
use crate::error::{Result, SpikeError};
use crate::spectra::ClassSample;

/// True leading eigenvectors per class (orthonormal within each class).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBasis {
    pub h: [Vec<DVector<f64>>; 2],
}

impl OracleBasis {
    pub fn identity() -> Self {
        Self {
            h: [Vec::new(), Vec::new()],
        }
    }
}

/// T-DBDA with the true projectors `A_i = I − Σ_{r≤k_i} h_i(r)h_i(r)ᵀ`.
///
/// Scores use the inner-product form
/// `x₀,A*ᵀ(x̄₂,A − x̄₁,A) + Σ_{j<j'} x₁j,Aᵀx₁j',A/{n₁(n₁−1)} − Σ_{j<j'} x₂j,Aᵀx₂j',A/{n₂(n₂−1)}`.
#[derive(Debug, Clone)]
pub struct OracleModel {
    weight: DVector<f64>,
    offset: f64,
    basis: OracleBasis,
    means: [DVector<f64>; 2],
    traces: [f64; 2],
    sizes: [usize; 2],
}

fn check_dims(basis: &OracleBasis, p: usize) -> Result<()> {
    for h in basis.h.iter().flatten() {
        if h.len() != p {
            return Err(SpikeError::DimensionMismatch {
                expected: p,
                found: h.len(),
            });
        }
    }
    Ok(())
}

/// `Σ_{j<j'} x_j,Aᵀx_j',A` from the raw Gram matrix and the basis scores.
fn projected_pair_sum(sample: &ClassSample, basis: &[DVector<f64>]) -> f64 {
    let x = sample.data();
    let gram = x.tr_mul(x);
    let n = sample.n();
    let scores: Vec<DVector<f64>> = basis.iter().map(|h| x.tr_mul(h)).collect();
    let mut acc = 0.0;
    for j in 0..n {
        for l in (j + 1)..n {
            let mut v = gram[(j, l)];
            for s in &scores {
                v -= s[j] * s[l];
            }
            acc += v;
        }
    }
    acc
}

/// `tr(A S) = tr(S) − Σ_r h_rᵀ S h_r`.
fn projected_trace(sample: &ClassSample, basis: &[DVector<f64>]) -> f64 {
    let xc = sample.centered();
    let nm1 = sample.n() as f64 - 1.0;
    let mut t = xc.norm_squared() / nm1;
    for h in basis {
        t -= xc.tr_mul(h).norm_squared() / nm1;
    }
    t
}

impl OracleModel {
    pub fn fit(basis: &OracleBasis, train1: &ClassSample, train2: &ClassSample) -> Result<Self> {
        let p = train1.p();
        if train2.p() != p {
            return Err(SpikeError::DimensionMismatch {
                expected: p,
                found: train2.p(),
            });
        }
        check_dims(basis, p)?;
        let means = [train1.mean(), train2.mean()];
        let a1m1 = project_out(&basis.h[0], &means[0]);
        let a2m2 = project_out(&basis.h[1], &means[1]);
        let d = &a2m2 - &a1m1;
        let weight = (project_out(&basis.h[0], &d) + project_out(&basis.h[1], &d)) * 0.5;
        let (n1, n2) = (train1.n() as f64, train2.n() as f64);
        let offset = projected_pair_sum(train1, &basis.h[0]) / (n1 * (n1 - 1.0))
            - projected_pair_sum(train2, &basis.h[1]) / (n2 * (n2 - 1.0));
        Ok(Self {
            weight,
            offset,
            basis: basis.clone(),
            traces: [
                projected_trace(train1, &basis.h[0]),
                projected_trace(train2, &basis.h[1]),
            ],
            means,
            sizes: [train1.n(), train2.n()],
        })
    }

    pub fn score(&self, x0: &DVector<f64>) -> Result<Decision> {
        if x0.len() != self.weight.len() {
            return Err(SpikeError::DimensionMismatch {
                expected: self.weight.len(),
                found: x0.len(),
            });
        }
        Ok(Decision::from_score(
            x0.dot(&self.weight) + self.offset,
            Method::TdbdaOracle,
        ))
    }

    /// The same statistic through the projected-distance form
    /// `(A_*x₀ − (x̄₁,A + x̄₂,A)/2)ᵀ(x̄₂,A − x̄₁,A) − tr(A₁S₁)/(2n₁) + tr(A₂S₂)/(2n₂)`.
    pub fn score_projected_form(&self, x0: &DVector<f64>) -> Result<f64> {
        if x0.len() != self.weight.len() {
            return Err(SpikeError::DimensionMismatch {
                expected: self.weight.len(),
                found: x0.len(),
            });
        }
        let rule = LinearRule::projected_distance(
            [&self.basis.h[0], &self.basis.h[1]],
            [&self.means[0], &self.means[1]],
            self.traces,
            self.sizes,
        );
        Ok(rule.score(x0))
    }
}

/// One-shot oracle T-DBDA score for `x0`.
pub fn tdbda_oracle_score(
    basis: &OracleBasis,
    train1: &ClassSample,
    train2: &ClassSample,
    x0: &DVector<f64>,
) -> Result<Decision> {
    OracleModel::fit(basis, train1, train2)?.score(x0)
}
