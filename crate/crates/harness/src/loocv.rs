//! Leave-one-out cross-validation on a labelled dataset.

use rayon::prelude::*;
use spike_core::classifiers::{fit, FitOptions, KChoice};
use spike_core::spectra::MIN_CLASS_SIZE;
use spike_core::Method;

use crate::error::{HarnessError, Result};
use crate::ingest::DatasetTable;
use crate::json::SCHEMA_VERSION;
use crate::report::{first_messages, tally_k, ExperimentReport, KPolicy, MethodResult, ReportConfig};

#[derive(Debug, Clone)]
pub struct LoocvConfig {
    pub methods: Vec<Method>,
    pub k_policy: KPolicy,
    /// Recentre each fold by the pooled mean of its training observations.
    pub center: bool,
}

struct Fold {
    class: u8,
    wrong: Vec<Option<bool>>,
    k_hat: Option<(usize, usize)>,
    failure: Option<String>,
}

/// Spike counts selected on the full dataset (used by `fixed-from-full`).
pub fn full_data_k(data: &DatasetTable, center: bool) -> Result<(usize, usize)> {
    let model = fit(
        &data.class_sample(1)?,
        &data.class_sample(2)?,
        &FitOptions::new(KChoice::Auto, center),
    )?;
    Ok(model.k())
}

pub fn loocv(data: &DatasetTable, cfg: &LoocvConfig) -> Result<ExperimentReport> {
    if cfg.methods.is_empty() {
        return Err(HarnessError::Config("no methods requested".into()));
    }
    if cfg.methods.contains(&Method::TdbdaOracle) {
        return Err(HarnessError::Config(
            "tdbda_oracle needs population truth and is not available for datasets".into(),
        ));
    }
    let counts = data.class_counts();
    if counts.iter().any(|&c| c < MIN_CLASS_SIZE + 1) {
        return Err(HarnessError::Config(format!(
            "LOOCV needs at least {} observations per class, got {} and {}",
            MIN_CLASS_SIZE + 1,
            counts[0],
            counts[1]
        )));
    }
    let k = match cfg.k_policy {
        KPolicy::Auto => KChoice::Auto,
        KPolicy::Fixed(a, b) => KChoice::Fixed(a, b),
        KPolicy::FixedFromFull => {
            let (a, b) = full_data_k(data, cfg.center)?;
            KChoice::Fixed(a, b)
        }
        KPolicy::Truth => {
            return Err(HarnessError::Config(
                "k policy 'truth' applies to simulations only".into(),
            ))
        }
    };
    let opts = FitOptions::new(k, cfg.center);
    let idx = [data.class_indices(1), data.class_indices(2)];

    let folds: Vec<Fold> = (0..data.n())
        .into_par_iter()
        .map(|j| {
            let class = data.labels[j];
            let keep = |c: usize| -> Vec<usize> { idx[c].iter().copied().filter(|&i| i != j).collect() };
            let t1 = spike_core::ClassSample::new(data.features.select_columns(&keep(0)))?;
            let t2 = spike_core::ClassSample::new(data.features.select_columns(&keep(1)))?;
            let x0 = data.features.column(j).into_owned();
            match fit(&t1, &t2, &opts) {
                Ok(model) => {
                    let wrong = cfg
                        .methods
                        .iter()
                        .map(|&m| model.score(m, &x0).ok().map(|d| d.label != class))
                        .collect();
                    Ok(Fold {
                        class,
                        wrong,
                        k_hat: (!matches!(cfg.k_policy, KPolicy::Fixed(..))).then(|| model.k()),
                        failure: None,
                    })
                }
                Err(e) => Ok(Fold {
                    class,
                    wrong: vec![None; cfg.methods.len()],
                    k_hat: None,
                    failure: Some(format!("fold {}: {e}", j + 1)),
                }),
            }
        })
        .collect::<Result<_>>()?;

    let results = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let mut errors = [0usize; 2];
            let mut trials = [0usize; 2];
            let mut skipped = 0;
            for f in &folds {
                let i = f.class as usize - 1;
                match f.wrong[mi] {
                    Some(w) => {
                        trials[i] += 1;
                        errors[i] += w as usize;
                    }
                    None => skipped += 1,
                }
            }
            MethodResult::from_counts(m, errors, trials, skipped)
        })
        .collect();

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        kind: "loocv".into(),
        config: ReportConfig {
            scenario: None,
            input: Some(data.source_path.clone()),
            p: data.p(),
            n1: counts[0],
            n2: counts[1],
            seed: None,
            replications: data.n(),
            methods: cfg.methods.clone(),
            k_policy: cfg.k_policy,
            center: cfg.center,
            training: "leave-one-out".into(),
        },
        results,
        oracle: None,
        k_hat: tally_k(folds.iter().filter_map(|f| f.k_hat)),
        fit_failures: folds.iter().filter(|f| f.failure.is_some()).count(),
        failure_messages: first_messages(folds.iter().filter_map(|f| f.failure.clone())),
    })
}
