//! Two-class classification rules.
//!
//! All rules share the sign convention of the distance-based classifier:
//! a negative statistic assigns `x₀` to class 1, anything else (ties included)
//! to class 2.
//!
//! * DBDA: the bias-corrected distance rule.
//! * T-DBDA: DBDA after projecting out the noise-reduced leading directions of
//!   each class, with bias-corrected scores.
//! * T-DBDA(n): the same transformation with raw sample eigenvectors.
//! * T-DBDA(b): true projectors, simulation only ([`OracleModel`]).
//! * DLDA / DQDA: diagonal Gaussian baselines.

mod diagonal;
mod distance;
mod oracle;

pub use diagonal::{DiagonalModel, VARIANCE_FLOOR};
pub use oracle::{tdbda_oracle_score, OracleBasis, OracleModel};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpikeError};
use crate::spectra::{
    self, cdm_spectrum_with, default_gamma, usable_components, CdmSpectrum, ClassSample, DualSpectrum,
    NrSpectrum, MIN_CLASS_SIZE,
};
use crate::transform::{self, PcScores};
use distance::LinearRule;

/// Classification rule identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dbda,
    Tdbda,
    TdbdaNaive,
    TdbdaOracle,
    Dlda,
    Dqda,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dbda,
        Method::Tdbda,
        Method::TdbdaNaive,
        Method::TdbdaOracle,
        Method::Dlda,
        Method::Dqda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dbda => "dbda",
            Method::Tdbda => "tdbda",
            Method::TdbdaNaive => "tdbda_naive",
            Method::TdbdaOracle => "tdbda_oracle",
            Method::Dlda => "dlda",
            Method::Dqda => "dqda",
        }
    }

    /// Parses a comma separated list such as `tdbda,dbda,dlda`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(SpikeError::Configuration("empty method list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SpikeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SpikeError::Configuration(format!("unknown method '{s}'")))
    }
}

/// Outcome of scoring one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub score: f64,
    /// 1 or 2.
    pub label: u8,
    pub method: Method,
}

impl Decision {
    pub fn from_score(score: f64, method: Method) -> Self {
        Self {
            score,
            label: if score < 0.0 { 1 } else { 2 },
            method,
        }
    }
}

/// How the number of removed spikes is chosen per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KChoice {
    /// Cross-data-matrix selection rule on each training sample.
    Auto,
    Fixed(usize, usize),
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub k: KChoice,
    /// Subtract the pooled training mean from training data and test points.
    pub center: bool,
    pub gamma: fn(usize) -> f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            k: KChoice::Auto,
            center: false,
            gamma: default_gamma,
        }
    }
}

impl FitOptions {
    pub fn new(k: KChoice, center: bool) -> Self {
        Self {
            k,
            center,
            ..Self::default()
        }
    }
}

/// Something the fit adjusted and the caller should know about.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWarning {
    /// A requested `k` exceeded `n − 2`.
    KClamped {
        class: u8,
        requested: usize,
        used: usize,
    },
    /// Noise-reduced eigenvalues vanished; `k` was reduced.
    DegenerateSpikes {
        class: u8,
        requested: usize,
        used: usize,
    },
    /// Per-feature variances lifted to the floor in the diagonal rules.
    VarianceFloor {
        class1: usize,
        class2: usize,
        pooled: usize,
    },
}

/// Per-class pieces of a fitted model.
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub n: usize,
    /// `x̄_i` after centering.
    pub mean: DVector<f64>,
    /// `tr(S_i)`, computed as `tr(S_iD)`.
    pub trace_s: f64,
    pub k: usize,
    pub dual: DualSpectrum,
    /// Noise-reduced spectrum truncated at `k`.
    pub nr: NrSpectrum,
    pub scores: PcScores,
    /// Present when `k` was selected automatically.
    pub cdm: Option<CdmSpectrum>,
}

/// A fitted two-class model, immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub classes: [ClassModel; 2],
    /// Pooled training mean subtracted at fit time, if centering was on.
    pub centering_offset: Option<DVector<f64>>,
    pub warnings: Vec<FitWarning>,
    dbda: LinearRule,
    naive: LinearRule,
    tdbda_coef: [Vec<f64>; 2],
    tdbda_bias: [f64; 2],
    diagonal: DiagonalModel,
}

fn fit_class(
    sample: &ClassSample,
    class: u8,
    k_fixed: Option<usize>,
    gamma: fn(usize) -> f64,
    warnings: &mut Vec<FitWarning>,
) -> Result<ClassModel> {
    let n = sample.n();
    let xc = sample.centered();
    let sd = spectra::dual::gram_of_centered(&xc);
    let dual = spectra::eigen_dual(&sd)?;
    let nr_eigvals = spectra::nr_eigenvalues(&dual);

    let (mut k, cdm) = match k_fixed {
        Some(k) => (k, None),
        None => {
            let mut cdm = cdm_spectrum_with(sample, &dual)?;
            let k = cdm.select(n, gamma);
            (k, Some(cdm))
        }
    };
    if k > n - 2 {
        warnings.push(FitWarning::KClamped {
            class,
            requested: k,
            used: n - 2,
        });
        k = n - 2;
    }
    let usable = usable_components(&dual, &nr_eigvals, k);
    if usable < k {
        warnings.push(FitWarning::DegenerateSpikes {
            class,
            requested: k,
            used: usable,
        });
        k = usable;
    }

    let nr = spectra::nr::nr_directions_centered(&xc, &dual, &nr_eigvals, k)?;
    let mean = sample.mean();
    let offsets = xc.tr_mul(&mean);
    let scores = transform::scores_from_gram(&sd, &offsets, &nr, k);
    Ok(ClassModel {
        n,
        mean,
        trace_s: dual.trace_sd,
        k,
        dual,
        nr,
        scores,
        cdm,
    })
}

/// Fits every rule on two training samples.
///
/// With `center` on, the pooled mean `Σ_i Σ_j x_ij/(n₁+n₂)` is subtracted from
/// all training columns and remembered for test points. A class whose `k` ends
/// up at 0 keeps the identity transformation; with both at 0, T-DBDA equals DBDA.
pub fn fit(train1: &ClassSample, train2: &ClassSample, opts: &FitOptions) -> Result<TrainedModel> {
    let p = train1.p();
    if train2.p() != p {
        return Err(SpikeError::DimensionMismatch {
            expected: p,
            found: train2.p(),
        });
    }
    for (i, s) in [train1, train2].iter().enumerate() {
        if s.n() < MIN_CLASS_SIZE {
            return Err(SpikeError::InvalidData(format!(
                "class {} has {} observations; at least {MIN_CLASS_SIZE} are required",
                i + 1,
                s.n()
            )));
        }
    }

    let (t1, t2, centering_offset) = if opts.center {
        let total = train1.n() + train2.n();
        let mut sum = DVector::zeros(p);
        for col in train1.data().column_iter().chain(train2.data().column_iter()) {
            sum += col;
        }
        let offset = sum / total as f64;
        (train1.shifted(&offset)?, train2.shifted(&offset)?, Some(offset))
    } else {
        (train1.clone(), train2.clone(), None)
    };

    let mut warnings = Vec::new();
    let (k1, k2) = match opts.k {
        KChoice::Auto => (None, None),
        KChoice::Fixed(a, b) => (Some(a), Some(b)),
    };
    let c1 = fit_class(&t1, 1, k1, opts.gamma, &mut warnings)?;
    let c2 = fit_class(&t2, 2, k2, opts.gamma, &mut warnings)?;

    let sizes = [c1.n, c2.n];
    let dbda =
        LinearRule::projected_distance([&[], &[]], [&c1.mean, &c2.mean], [c1.trace_s, c2.trace_s], sizes);
    let naive_trace = |c: &ClassModel| c.trace_s - c.nr.raw_eigvals.iter().sum::<f64>();
    let naive = LinearRule::projected_distance(
        [&c1.nr.raw_dirs, &c2.nr.raw_dirs],
        [&c1.mean, &c2.mean],
        [naive_trace(&c1), naive_trace(&c2)],
        sizes,
    );

    let tdbda_coef = [
        correction_coefficients(&c1, &c2),
        correction_coefficients(&c2, &c1),
    ];
    let tdbda_bias = [pair_bias(&c1), pair_bias(&c2)];

    let diagonal = DiagonalModel::fit(&t1, &t2);
    if diagonal.floored.iter().any(|&c| c > 0) {
        warnings.push(FitWarning::VarianceFloor {
            class1: diagonal.floored[0],
            class2: diagonal.floored[1],
            pooled: diagonal.floored[2],
        });
    }

    Ok(TrainedModel {
        classes: [c1, c2],
        centering_offset,
        warnings,
        dbda,
        naive,
        tdbda_coef,
        tdbda_bias,
        diagonal,
    })
}

/// `x̄̃_i(r) − ½ h̃_i(r)ᵀ(x̄_{i'} − Σ_s x̄̃_{i'}(s) h̃_{i'}(s))` for each `r ≤ k_i`.
fn correction_coefficients(own: &ClassModel, other: &ClassModel) -> Vec<f64> {
    (0..own.k)
        .map(|r| {
            let h = &own.nr.nr_dirs[r];
            let mut inner = h.dot(&other.mean);
            for s in 0..other.k {
                inner -= other.scores.train_means[s] * h.dot(&other.nr.nr_dirs[s]);
            }
            own.scores.train_means[r] - 0.5 * inner
        })
        .collect()
}

/// `Σ_r Σ_{j<j'} x̃_j(r) x̃_j'(r) / {n(n−1)}`.
fn pair_bias(c: &ClassModel) -> f64 {
    let n = c.n as f64;
    c.scores.pair_sums().iter().sum::<f64>() / (n * (n - 1.0))
}

impl TrainedModel {
    pub fn p(&self) -> usize {
        self.classes[0].mean.len()
    }

    pub fn k(&self) -> (usize, usize) {
        (self.classes[0].k, self.classes[1].k)
    }

    fn prepare(&self, x0: &DVector<f64>) -> Result<DVector<f64>> {
        if x0.len() != self.p() {
            return Err(SpikeError::DimensionMismatch {
                expected: self.p(),
                found: x0.len(),
            });
        }
        Ok(match &self.centering_offset {
            Some(off) => x0 - off,
            None => x0.clone(),
        })
    }

    /// Scores `x0` with one rule. The oracle rule needs population truth and
    /// is served by [`OracleModel`] instead.
    pub fn score(&self, method: Method, x0: &DVector<f64>) -> Result<Decision> {
        match method {
            Method::Dbda => self.dbda_score(x0),
            Method::Tdbda => self.tdbda_score(x0),
            Method::TdbdaNaive => self.tdbda_naive_score(x0),
            Method::Dlda => self.dlda_score(x0),
            Method::Dqda => self.dqda_score(x0),
            Method::TdbdaOracle => Err(SpikeError::Configuration(
                "tdbda_oracle needs population truth; use OracleModel".into(),
            )),
        }
    }

    /// `W(x₀) = (x₀ − (x̄₁+x̄₂)/2)ᵀ(x̄₂ − x̄₁) − tr(S₁)/(2n₁) + tr(S₂)/(2n₂)`.
    pub fn dbda_score(&self, x0: &DVector<f64>) -> Result<Decision> {
        let x = self.prepare(x0)?;
        Ok(Decision::from_score(self.dbda.score(&x), Method::Dbda))
    }

    /// Transformed rule with noise-reduced directions and bias-corrected scores.
    pub fn tdbda_score(&self, x0: &DVector<f64>) -> Result<Decision> {
        let x = self.prepare(x0)?;
        let mut w = self.dbda.score(&x);
        for (i, sign) in [(0usize, 1.0), (1, -1.0)] {
            let c = &self.classes[i];
            for (h, coef) in c.nr.nr_dirs.iter().zip(&self.tdbda_coef[i]) {
                w += sign * x.dot(h) * coef;
            }
        }
        w = w - self.tdbda_bias[0] + self.tdbda_bias[1];
        Ok(Decision::from_score(w, Method::Tdbda))
    }

    /// Transformed rule with raw unit sample eigenvectors.
    pub fn tdbda_naive_score(&self, x0: &DVector<f64>) -> Result<Decision> {
        let x = self.prepare(x0)?;
        Ok(Decision::from_score(self.naive.score(&x), Method::TdbdaNaive))
    }

    pub fn dlda_score(&self, x0: &DVector<f64>) -> Result<Decision> {
        let x = self.prepare(x0)?;
        Ok(Decision::from_score(self.diagonal.dlda_score(&x), Method::Dlda))
    }

    pub fn dqda_score(&self, x0: &DVector<f64>) -> Result<Decision> {
        let x = self.prepare(x0)?;
        Ok(Decision::from_score(self.diagonal.dqda_score(&x), Method::Dqda))
    }

    /// Test points as the columns of a matrix.
    pub fn score_columns(&self, method: Method, x: &DMatrix<f64>) -> Result<Vec<Decision>> {
        x.column_iter()
            .map(|c| self.score(method, &c.into_owned()))
            .collect()
    }
}
