//! Per-class spectral diagnostics for a labelled dataset.

use serde::Serialize;
use spike_core::spectra::{
    cdm_spectrum_with, default_gamma, dual_covariance, eigen_dual, nr_eigenvalues, MIN_CLASS_SIZE,
};
use spike_core::ClassSample;

use crate::error::{HarnessError, Result};
use crate::ingest::{cell, DatasetTable};
use crate::json::SCHEMA_VERSION;

/// Number of leading components listed per class.
pub const REPORTED_COMPONENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSpectra {
    pub class: u8,
    pub n: usize,
    pub trace_s: f64,
    pub gamma: f64,
    pub split_sizes: (usize, usize),
    pub lambda_hat: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
    pub eps_hat: Vec<f64>,
    pub eta_hat: Vec<f64>,
    pub psi_hat: Vec<f64>,
    pub tau_hat: Vec<f64>,
    pub tau_tilde: Vec<f64>,
    pub k_hat: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraReport {
    pub schema_version: u32,
    pub input: String,
    pub p: usize,
    pub center: bool,
    pub classes: Vec<ClassSpectra>,
}

fn head(v: &[f64]) -> Vec<f64> {
    v.iter().copied().take(REPORTED_COMPONENTS).collect()
}

pub fn class_spectra(sample: &ClassSample, class: u8) -> Result<ClassSpectra> {
    let n = sample.n();
    if n < MIN_CLASS_SIZE {
        return Err(HarnessError::Config(format!(
            "class {class} has {n} observations; spectra need at least {MIN_CLASS_SIZE}"
        )));
    }
    let dual = eigen_dual(&dual_covariance(sample))?;
    let nr = nr_eigenvalues(&dual);
    let mut cdm = cdm_spectrum_with(sample, &dual)?;
    let k_hat = cdm.select(n, default_gamma);
    Ok(ClassSpectra {
        class,
        n,
        trace_s: dual.trace_sd,
        gamma: default_gamma(n),
        split_sizes: cdm.split_sizes,
        lambda_hat: head(&dual.eigvals),
        lambda_tilde: head(&nr),
        eps_hat: head(&cdm.eps_hat),
        eta_hat: head(&cdm.eta_hat),
        psi_hat: cdm.psi_hat.clone(),
        tau_tilde: cdm.tau_tilde(n, default_gamma),
        tau_hat: cdm.tau_hat.clone(),
        k_hat,
    })
}

/// Spectral diagnostics of both classes. Centering subtracts the pooled
/// mean; it is accepted for protocol symmetry but leaves every quantity here
/// unchanged, since they depend on the data only through within-class
/// deviations.
pub fn spectra_report(data: &DatasetTable, center: bool) -> Result<SpectraReport> {
    let mut s1 = data.class_sample(1)?;
    let mut s2 = data.class_sample(2)?;
    if center {
        let n = data.n() as f64;
        let off = data.features.column_sum() / n;
        s1 = s1.shifted(&off)?;
        s2 = s2.shifted(&off)?;
    }
    Ok(SpectraReport {
        schema_version: SCHEMA_VERSION,
        input: data.source_path.clone(),
        p: data.p(),
        center,
        classes: vec![class_spectra(&s1, 1)?, class_spectra(&s2, 2)?],
    })
}

impl SpectraReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "class",
        "r",
        "lambda_hat",
        "lambda_tilde",
        "eps_hat",
        "eta_hat",
        "tau_hat",
        "tau_tilde",
    ];

    /// Plot-ready rows, one per class and component.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let get = |v: &[f64], r: usize| v.get(r).map_or(String::new(), |&x| cell(x));
        let mut rows = Vec::new();
        for c in &self.classes {
            let m = c.lambda_hat.len().max(c.eps_hat.len()).max(c.eta_hat.len());
            for r in 0..m.min(REPORTED_COMPONENTS) {
                rows.push(vec![
                    c.class.to_string(),
                    (r + 1).to_string(),
                    get(&c.lambda_hat, r),
                    get(&c.lambda_tilde, r),
                    get(&c.eps_hat, r),
                    get(&c.eta_hat, r),
                    get(&c.tau_hat, r),
                    get(&c.tau_tilde, r),
                ]);
            }
        }
        rows
    }
}
