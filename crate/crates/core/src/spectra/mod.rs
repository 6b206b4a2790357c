//! Spectral estimation from a single class sample.
//!
//! Everything here works on the `n × n` dual (Gram) side of the data, so the
//! cost is `O(n²p)` and no `p × p` matrix is ever formed. The pieces are:
//!
//! * [`dual_covariance`] and [`eigen_dual`]: the dual sample covariance and its
//!   eigenpairs.
//! * [`nr_eigenvalues`] and [`nr_directions`]: noise-reduced eigenvalues and
//!   direction vectors.
//! * [`cdm_spectrum`] and [`select_k`]: cross-data-matrix singular values,
//!   the `Ψ̂`/`τ̂` sequences and the spike-count rule.

mod cdm;
pub(crate) mod dual;
pub(crate) mod nr;

pub use cdm::{cdm_spectrum, cdm_spectrum_with, default_gamma, select_k, CdmSpectrum};
pub use dual::{dual_covariance, eigen_dual, DualSpectrum};
pub use nr::{nr_directions, nr_eigenvalues, usable_components, NrSpectrum};

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpikeError};

/// Relative threshold below which dual eigenvalues, singular values and
/// noise-reduced eigenvalues are treated as zero (relative to the leading one).
pub const RELATIVE_ZERO: f64 = 1e-12;

/// Smallest per-class sample size accepted by the classifiers and by the
/// cross-data-matrix split.
pub const MIN_CLASS_SIZE: usize = 4;

/// A `p × n` feature-by-sample matrix holding one population's observations.
///
/// Columns are observations. Construction checks that every entry is finite
/// and that there are at least two columns; operations that need the larger
/// `n ≥ 4` check it themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSample {
    data: DMatrix<f64>,
}

impl ClassSample {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(SpikeError::InvalidData("sample has no features".into()));
        }
        if data.ncols() < 2 {
            return Err(SpikeError::InvalidData(format!(
                "sample needs at least 2 observations, got {}",
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % data.nrows(), pos / data.nrows());
            return Err(SpikeError::InvalidData(format!(
                "non-finite entry at feature {row}, observation {col}"
            )));
        }
        Ok(Self { data })
    }

    /// Builds a sample from observation vectors (each of length `p`).
    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(SpikeError::InvalidData("no observations".into()));
        }
        let p = columns[0].len();
        if let Some(bad) = columns.iter().find(|c| c.len() != p) {
            return Err(SpikeError::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    /// Number of features.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    /// Sample mean vector `x̄`.
    pub fn mean(&self) -> DVector<f64> {
        column_mean(&self.data)
    }

    /// `X − X̄`, the column-centered data.
    pub fn centered(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut out = self.data.clone();
        for mut col in out.column_iter_mut() {
            col -= &mean;
        }
        out
    }

    /// Subtracts `offset` from every observation.
    pub fn shifted(&self, offset: &DVector<f64>) -> Result<Self> {
        if offset.len() != self.p() {
            return Err(SpikeError::DimensionMismatch {
                expected: self.p(),
                found: offset.len(),
            });
        }
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            col -= offset;
        }
        Self::new(data)
    }

    /// Keeps the listed observations, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.n()) {
            return Err(SpikeError::InvalidData(format!(
                "observation index {bad} out of range for n = {}",
                self.n()
            )));
        }
        Self::new(self.data.select_columns(indices))
    }

    /// Drops one observation.
    pub fn without_column(&self, j: usize) -> Result<Self> {
        let keep: Vec<usize> = (0..self.n()).filter(|&c| c != j).collect();
        self.select_columns(&keep)
    }

    /// Sum of diagonal entries of the sample covariance, `tr(S)`, computed
    /// without forming `S`.
    pub fn trace_covariance(&self) -> f64 {
        let xc = self.centered();
        xc.norm_squared() / (self.n() as f64 - 1.0)
    }
}

pub(crate) fn column_mean(data: &DMatrix<f64>) -> DVector<f64> {
    let n = data.ncols() as f64;
    let mut sum = DVector::zeros(data.nrows());
    for col in data.column_iter() {
        sum += col;
    }
    sum / n
}
