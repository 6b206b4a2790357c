//! Train-on-one-file, classify-another.

use nalgebra::DMatrix;
use spike_core::classifiers::{fit, FitOptions, FitWarning, KChoice};
use spike_core::Method;

use crate::error::{HarnessError, Result};
use crate::ingest::{cell, DatasetTable};
use crate::report::KPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Zero-based column of the test file.
    pub index: usize,
    pub method: Method,
    pub score: f64,
    pub label: u8,
    pub truth: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct ClassifyOutcome {
    pub k: (usize, usize),
    pub warnings: Vec<FitWarning>,
    pub predictions: Vec<Prediction>,
}

pub fn classify(
    train: &DatasetTable,
    test: &DMatrix<f64>,
    truth: Option<&[u8]>,
    methods: &[Method],
    k_policy: KPolicy,
    center: bool,
) -> Result<ClassifyOutcome> {
    if test.nrows() != train.p() {
        return Err(HarnessError::Config(format!(
            "test data has {} features, training data {}",
            test.nrows(),
            train.p()
        )));
    }
    let k = match k_policy {
        KPolicy::Auto => KChoice::Auto,
        KPolicy::Fixed(a, b) => KChoice::Fixed(a, b),
        other => {
            return Err(HarnessError::Config(format!(
                "k policy '{other}' is not available for classify"
            )))
        }
    };
    let model = fit(
        &train.class_sample(1)?,
        &train.class_sample(2)?,
        &FitOptions::new(k, center),
    )?;
    let mut predictions = Vec::with_capacity(test.ncols() * methods.len());
    for (j, col) in test.column_iter().enumerate() {
        let x = col.into_owned();
        for &m in methods {
            let d = model.score(m, &x)?;
            predictions.push(Prediction {
                index: j,
                method: m,
                score: d.score,
                label: d.label,
                truth: truth.map(|t| t[j]),
            });
        }
    }
    Ok(ClassifyOutcome {
        k: model.k(),
        warnings: model.warnings.clone(),
        predictions,
    })
}

impl ClassifyOutcome {
    pub const CSV_HEADER: [&'static str; 5] = ["index", "method", "score", "label", "truth"];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.predictions
            .iter()
            .map(|p| {
                vec![
                    (p.index + 1).to_string(),
                    p.method.to_string(),
                    cell(p.score),
                    p.label.to_string(),
                    p.truth.map_or(String::new(), |t| t.to_string()),
                ]
            })
            .collect()
    }
}
