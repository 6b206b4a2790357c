use nalgebra::DVector;

use crate::spectra::ClassSample;

/// Relative floor applied to per-feature variances (times the largest one).
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Diagonal Gaussian discriminant rules (pooled and per-class variances).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalModel {
    means: [DVector<f64>; 2],
    variances: [DVector<f64>; 2],
    pooled: DVector<f64>,
    /// Number of variances lifted to the floor: class 1, class 2, pooled.
    pub floored: [usize; 3],
}

fn unbiased_variances(sample: &ClassSample) -> DVector<f64> {
    let xc = sample.centered();
    let nm1 = sample.n() as f64 - 1.0;
    DVector::from_iterator(xc.nrows(), xc.row_iter().map(|row| row.norm_squared() / nm1))
}

fn apply_floor(v: &mut DVector<f64>) -> usize {
    let floor = VARIANCE_FLOOR * v.max();
    let mut count = 0;
    for x in v.iter_mut() {
        if *x < floor || *x == 0.0 {
            // All-zero variances: fall back to an absolute floor so the rule stays finite.
            *x = if floor > 0.0 { floor } else { f64::MIN_POSITIVE };
            count += 1;
        }
    }
    count
}

impl DiagonalModel {
    pub fn fit(train1: &ClassSample, train2: &ClassSample) -> Self {
        let (n1, n2) = (train1.n() as f64, train2.n() as f64);
        let mut v1 = unbiased_variances(train1);
        let mut v2 = unbiased_variances(train2);
        let mut pooled = (&v1 * (n1 - 1.0) + &v2 * (n2 - 1.0)) / (n1 + n2 - 2.0);
        let floored = [
            apply_floor(&mut v1),
            apply_floor(&mut v2),
            apply_floor(&mut pooled),
        ];
        Self {
            means: [train1.mean(), train2.mean()],
            variances: [v1, v2],
            pooled,
            floored,
        }
    }

    /// `Σ_f (x_f − m₁f)²/σ²_f − Σ_f (x_f − m₂f)²/σ²_f` with pooled `σ²`.
    pub fn dlda_score(&self, x0: &DVector<f64>) -> f64 {
        let mut score = 0.0;
        for f in 0..x0.len() {
            let a = x0[f] - self.means[0][f];
            let b = x0[f] - self.means[1][f];
            score += (a * a - b * b) / self.pooled[f];
        }
        score
    }

    /// `Σ_f {(x_f − m₁f)²/σ²₁f + ln σ²₁f} − Σ_f {(x_f − m₂f)²/σ²₂f + ln σ²₂f}`.
    pub fn dqda_score(&self, x0: &DVector<f64>) -> f64 {
        let mut score = 0.0;
        for f in 0..x0.len() {
            let a = x0[f] - self.means[0][f];
            let b = x0[f] - self.means[1][f];
            let (v1, v2) = (self.variances[0][f], self.variances[1][f]);
            score += (a * a / v1 - b * b / v2) + (v1.ln() - v2.ln());
        }
        score
    }
}
