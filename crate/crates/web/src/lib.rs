//! Browser demo: spectral estimates on a simulated spiked sample, a small
//! Monte Carlo on one of the synthetic scenarios, and per-class diagnostics of
//! a pasted two-class table.
//!
//! The `*_json` functions are plain Rust so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use nalgebra::DMatrix;
use serde::Serialize;
use spike_core::classifiers::OracleModel;
use spike_core::simgen::{make_scenario, replication_rng, Noise, ScenarioId, ScenarioSpec, StructuredCov};
use spike_core::spectra::{
    cdm_spectrum, default_gamma, dual_covariance, eigen_dual, nr_directions, nr_eigenvalues, select_k,
};
use spike_core::{fit, ClassSample, FitOptions, KChoice, Method, Result, SpikeError};
use wasm_bindgen::prelude::*;

const SHOWN: usize = 8;

/// Largest dimension accepted from the page, to keep the tab responsive.
pub const MAX_P: usize = 4096;

fn head(v: &[f64]) -> Vec<f64> {
    v.iter().copied().take(SHOWN).collect()
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| SpikeError::Numeric(e.to_string()))
}

#[derive(Serialize)]
struct SpectrumView {
    true_eigvals: Vec<f64>,
    lambda_hat: Vec<f64>,
    lambda_tilde: Vec<f64>,
    kappa_hat: f64,
    /// `|h₁ᵀĥ₁|` and `|h₁ᵀh̃₁|` for the leading direction, which is `e₁`.
    align_raw: f64,
    align_nr: f64,
    eta_hat: Vec<f64>,
    k_hat: usize,
}

/// One sample of size `n` from `N(0, diag(spike, spike^(3/4), 1, …, 1))`.
pub fn spectrum_json(p: usize, n: usize, spike: f64, seed: u64) -> Result<String> {
    if !(3..=MAX_P).contains(&p) || !(4..=200).contains(&n) || spike.is_nan() || spike < 1.0 {
        return Err(SpikeError::Configuration(format!(
            "need 3 <= p <= {MAX_P}, 4 <= n <= 200 and spike >= 1"
        )));
    }
    let mut d = vec![1.0; p];
    d[0] = spike;
    d[1] = spike.powf(0.75);
    let cov = StructuredCov::diagonal(d.clone())?;
    let x = cov.sample_columns(n, Noise::Gaussian, &mut replication_rng(seed, 0))?;
    let sample = ClassSample::new(x)?;
    let dual = eigen_dual(&dual_covariance(&sample))?;
    let lam = nr_eigenvalues(&dual);
    let nr = nr_directions(&sample, &dual, &lam, 1)?;
    let cdm = cdm_spectrum(&sample)?;
    let k_hat = select_k(&cdm, n, default_gamma);
    d.sort_by(|a, b| b.total_cmp(a));
    to_json(&SpectrumView {
        true_eigvals: head(&d),
        lambda_hat: head(&dual.eigvals),
        lambda_tilde: head(&lam),
        kappa_hat: nr.kappa_hat,
        align_raw: nr.raw_dirs[0][0].abs(),
        align_nr: nr.nr_dirs[0][0].abs(),
        eta_hat: head(&cdm.eta_hat),
        k_hat,
    })
}

#[derive(Serialize)]
struct Rate {
    method: String,
    e1: f64,
    e2: f64,
    e: f64,
}

#[derive(Serialize)]
struct SimulationView {
    scenario: String,
    p: usize,
    n: [usize; 2],
    k: [usize; 2],
    replications: usize,
    rates: Vec<Rate>,
    /// Large-p error limits of the oracle rule.
    limit: [f64; 2],
}

/// Fresh training set and one test point per class in each replication.
pub fn simulate_json(scenario: &str, p: usize, reps: usize, seed: u64, auto_k: bool) -> Result<String> {
    if !(16..=MAX_P).contains(&p) || !(1..=2000).contains(&reps) {
        return Err(SpikeError::Configuration(format!(
            "need 16 <= p <= {MAX_P} and 1 <= replications <= 2000"
        )));
    }
    let id: ScenarioId = scenario.parse()?;
    let sc = make_scenario(&ScenarioSpec {
        id,
        p,
        seed,
        replications: reps,
    })?;
    let methods = [
        Method::Tdbda,
        Method::TdbdaNaive,
        Method::TdbdaOracle,
        Method::Dbda,
        Method::Dlda,
        Method::Dqda,
    ];
    let k = if auto_k {
        KChoice::Auto
    } else {
        KChoice::Fixed(sc.truth.k[0], sc.truth.k[1])
    };
    let basis = sc.truth.basis();
    let mut errors = vec![[0usize; 2]; methods.len()];
    let mut trials = vec![[0usize; 2]; methods.len()];
    for rep in 0..reps as u64 {
        let mut rng = replication_rng(seed, rep);
        let t1 = sc.sampler.sample_class(1, sc.n[0], &mut rng)?;
        let t2 = sc.sampler.sample_class(2, sc.n[1], &mut rng)?;
        let tests = [
            sc.sampler.sample_point(1, &mut rng)?,
            sc.sampler.sample_point(2, &mut rng)?,
        ];
        let model = fit(&t1, &t2, &FitOptions::new(k, false));
        let oracle = OracleModel::fit(&basis, &t1, &t2);
        for (m, &method) in methods.iter().enumerate() {
            for (i, x) in tests.iter().enumerate() {
                let d = match (method, &model, &oracle) {
                    (Method::TdbdaOracle, _, Ok(o)) => o.score(x),
                    (Method::TdbdaOracle, _, Err(e)) => Err(e.clone()),
                    (_, Ok(md), _) => md.score(method, x),
                    (_, Err(e), _) => Err(e.clone()),
                };
                if let Ok(d) = d {
                    trials[m][i] += 1;
                    errors[m][i] += usize::from(d.label as usize != i + 1);
                }
            }
        }
    }
    let rates = methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let rate = |i: usize| errors[m][i] as f64 / trials[m][i].max(1) as f64;
            Rate {
                method: method.to_string(),
                e1: rate(0),
                e2: rate(1),
                e: (rate(0) + rate(1)) / 2.0,
            }
        })
        .collect();
    to_json(&SimulationView {
        scenario: id.to_string(),
        p,
        n: sc.n,
        k: sc.truth.k,
        replications: reps,
        rates,
        limit: sc.deltas.edot_a,
    })
}

#[derive(Serialize)]
struct ClassView {
    class: u8,
    n: usize,
    lambda_hat: Vec<f64>,
    lambda_tilde: Vec<f64>,
    eps_hat: Vec<f64>,
    eta_hat: Vec<f64>,
    k_hat: usize,
}

/// `values` holds one observation per row (`labels.len()` rows of `p` values).
pub fn analyze_json(values: &[f64], labels: &[u8], p: usize) -> Result<String> {
    let n = labels.len();
    if p == 0 || values.len() != n * p {
        return Err(SpikeError::DimensionMismatch {
            expected: n * p,
            found: values.len(),
        });
    }
    let x = DMatrix::from_column_slice(p, n, values);
    let mut out = Vec::new();
    for class in [1u8, 2] {
        let cols: Vec<_> = (0..n)
            .filter(|&j| labels[j] == class)
            .map(|j| x.column(j).into_owned())
            .collect();
        if cols.len() < 4 {
            return Err(SpikeError::InvalidData(format!(
                "class {class} needs at least 4 rows, found {}",
                cols.len()
            )));
        }
        let sample = ClassSample::from_columns(&cols)?;
        let dual = eigen_dual(&dual_covariance(&sample))?;
        let cdm = cdm_spectrum(&sample)?;
        out.push(ClassView {
            class,
            n: cols.len(),
            lambda_hat: head(&dual.eigvals),
            lambda_tilde: head(&nr_eigenvalues(&dual)),
            eps_hat: head(&cdm.eps_hat),
            eta_hat: head(&cdm.eta_hat),
            k_hat: select_k(&cdm, cols.len(), default_gamma),
        });
    }
    to_json(&out)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(p: usize, n: usize, spike: f64, seed: u32) -> std::result::Result<String, JsError> {
    js(spectrum_json(p, n, spike, seed.into()))
}

#[wasm_bindgen]
pub fn simulate(
    scenario: &str,
    p: usize,
    reps: usize,
    seed: u32,
    auto_k: bool,
) -> std::result::Result<String, JsError> {
    js(simulate_json(scenario, p, reps, seed.into(), auto_k))
}

#[wasm_bindgen]
pub fn analyze(values: &[f64], labels: &[u8], p: usize) -> std::result::Result<String, JsError> {
    js(analyze_json(values, labels, p))
}
