//! Report types shared by the experiment runners.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use spike_core::simgen::OracleDeltas;
use spike_core::Method;

use crate::error::{HarnessError, Result};

/// How the classifiers choose the number of removed spikes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    /// The population value (simulations only).
    Truth,
    Fixed(usize, usize),
    /// Cross-data-matrix selection on every training set.
    Auto,
    /// Selected once on the full dataset, then held fixed (LOOCV only).
    FixedFromFull,
}

impl fmt::Display for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPolicy::Truth => f.write_str("truth"),
            KPolicy::Fixed(a, b) => write!(f, "{a},{b}"),
            KPolicy::Auto => f.write_str("auto"),
            KPolicy::FixedFromFull => f.write_str("fixed-from-full"),
        }
    }
}

impl FromStr for KPolicy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "truth" => return Ok(KPolicy::Truth),
            "auto" => return Ok(KPolicy::Auto),
            "fixed-from-full" => return Ok(KPolicy::FixedFromFull),
            _ => {}
        }
        let bad = || {
            HarnessError::Config(format!(
                "invalid k policy '{s}'; use auto, truth, fixed-from-full or K1,K2"
            ))
        };
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        Ok(KPolicy::Fixed(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ))
    }
}

impl Serialize for KPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Error counts and rates for one classifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: Method,
    /// Misclassified test points per class.
    pub errors: [usize; 2],
    /// Test points scored per class.
    pub trials: [usize; 2],
    pub e1: f64,
    pub e2: f64,
    /// `(e1 + e2)/2`.
    pub e: f64,
    pub se1: f64,
    pub se2: f64,
    pub se: f64,
    /// Replications or folds in which the method could not be evaluated.
    pub skipped: usize,
}

impl MethodResult {
    pub fn from_counts(method: Method, errors: [usize; 2], trials: [usize; 2], skipped: usize) -> Self {
        let rate = |i: usize| {
            if trials[i] == 0 {
                f64::NAN
            } else {
                errors[i] as f64 / trials[i] as f64
            }
        };
        let se = |e: f64, r: usize| (e * (1.0 - e) / r as f64).sqrt();
        let (e1, e2) = (rate(0), rate(1));
        let e = (e1 + e2) / 2.0;
        Self {
            method,
            errors,
            trials,
            e1,
            e2,
            e,
            se1: se(e1, trials[0]),
            se2: se(e2, trials[1]),
            se: se(e, trials[0].max(trials[1])),
            skipped,
        }
    }
}

/// Population reference values attached to simulation reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub delta: f64,
    pub delta_a: f64,
    pub k: [usize; 2],
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    #[serde(flatten)]
    pub deltas: OracleDeltas,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KCount {
    pub k1: usize,
    pub k2: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub scenario: Option<String>,
    pub input: Option<String>,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub seed: Option<u64>,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub k_policy: KPolicy,
    pub center: bool,
    /// `fresh`, `fixed` or `leave-one-out`.
    pub training: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    /// `monte_carlo` or `loocv`.
    pub kind: String,
    pub config: ReportConfig,
    pub results: Vec<MethodResult>,
    pub oracle: Option<OracleSummary>,
    /// Distribution of selected spike counts (empty unless selected from data).
    pub k_hat: Vec<KCount>,
    pub fit_failures: usize,
    /// First few distinct failure messages.
    pub failure_messages: Vec<String>,
}

impl ExperimentReport {
    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    /// Fraction of fits that selected `(k1, k2)`.
    pub fn k_hat_fraction(&self, k1: usize, k2: usize) -> f64 {
        let total: usize = self.k_hat.iter().map(|c| c.count).sum();
        let hit = self
            .k_hat
            .iter()
            .find(|c| c.k1 == k1 && c.k2 == k2)
            .map_or(0, |c| c.count);
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    /// The results as CSV rows (one per method).
    pub fn table_rows(&self) -> Vec<Vec<String>> {
        use crate::ingest::cell;
        self.results
            .iter()
            .map(|r| {
                vec![
                    r.method.to_string(),
                    cell(r.e1),
                    cell(r.e2),
                    cell(r.e),
                    cell(r.se1),
                    cell(r.se2),
                    cell(r.se),
                    r.errors[0].to_string(),
                    r.errors[1].to_string(),
                    r.trials[0].to_string(),
                    r.trials[1].to_string(),
                    r.skipped.to_string(),
                ]
            })
            .collect()
    }

    pub const TABLE_HEADER: [&'static str; 12] = [
        "method", "e1", "e2", "e", "se1", "se2", "se", "errors1", "errors2", "trials1", "trials2", "skipped",
    ];
}

pub(crate) fn tally_k(pairs: impl Iterator<Item = (usize, usize)>) -> Vec<KCount> {
    let mut map = std::collections::BTreeMap::new();
    for p in pairs {
        *map.entry(p).or_insert(0usize) += 1;
    }
    map.into_iter()
        .map(|((k1, k2), count)| KCount { k1, k2, count })
        .collect()
}

pub(crate) fn first_messages(msgs: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in msgs {
        if !out.contains(&m) {
            out.push(m);
            if out.len() == 5 {
                break;
            }
        }
    }
    out
}
