//! Monte Carlo error-rate studies on the synthetic scenarios.

use nalgebra::DVector;
use rayon::prelude::*;
use spike_core::classifiers::{fit, FitOptions, KChoice, OracleModel};
use spike_core::simgen::{make_scenario, replication_rng, ReplicationRng, Scenario, ScenarioSpec};
use spike_core::{ClassSample, Method};

use crate::error::{HarnessError, Result};
use crate::json::SCHEMA_VERSION;
use crate::report::{
    first_messages, tally_k, ExperimentReport, KPolicy, MethodResult, OracleSummary, ReportConfig,
};

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub scenario: ScenarioSpec,
    pub methods: Vec<Method>,
    pub k_policy: KPolicy,
    /// Subtract the pooled training mean before fitting and scoring.
    pub center: bool,
    /// Draw one training set for all replications; only test points vary.
    pub fixed_training: bool,
}

/// Stream used for the shared training set in fixed-training mode.
const FIXED_TRAINING_STREAM: u64 = u64::MAX;

struct RepOutcome {
    /// Per method: misclassified flags for the class-1 and class-2 test points,
    /// or `None` when the method could not be evaluated.
    wrong: Vec<Option<[bool; 2]>>,
    k_hat: Option<(usize, usize)>,
    failure: Option<String>,
}

fn draw_training(scenario: &Scenario, rng: &mut ReplicationRng) -> Result<(ClassSample, ClassSample)> {
    let s = &scenario.sampler;
    Ok((
        s.sample_class(1, scenario.n[0], rng)?,
        s.sample_class(2, scenario.n[1], rng)?,
    ))
}

fn center_all(
    t1: &ClassSample,
    t2: &ClassSample,
    tests: &[DVector<f64>; 2],
) -> Result<(ClassSample, ClassSample, [DVector<f64>; 2])> {
    let total = (t1.n() + t2.n()) as f64;
    let mut sum = DVector::zeros(t1.p());
    for c in t1.data().column_iter().chain(t2.data().column_iter()) {
        sum += c;
    }
    let off = sum / total;
    Ok((
        t1.shifted(&off)?,
        t2.shifted(&off)?,
        [&tests[0] - &off, &tests[1] - &off],
    ))
}

fn run_rep(
    scenario: &Scenario,
    cfg: &MonteCarloConfig,
    fixed: Option<&(ClassSample, ClassSample)>,
    rep: u64,
) -> Result<RepOutcome> {
    let mut rng = replication_rng(cfg.scenario.seed, rep);
    let owned;
    let (t1, t2) = match fixed {
        Some((a, b)) => (a, b),
        None => {
            owned = draw_training(scenario, &mut rng)?;
            (&owned.0, &owned.1)
        }
    };
    let tests = [
        scenario.sampler.sample_point(1, &mut rng)?,
        scenario.sampler.sample_point(2, &mut rng)?,
    ];

    let k = match cfg.k_policy {
        KPolicy::Truth => KChoice::Fixed(scenario.truth.k[0], scenario.truth.k[1]),
        KPolicy::Fixed(a, b) => KChoice::Fixed(a, b),
        KPolicy::Auto => KChoice::Auto,
        KPolicy::FixedFromFull => {
            return Err(HarnessError::Config(
                "fixed-from-full applies to LOOCV only".into(),
            ))
        }
    };
    let needs_fit = cfg.methods.iter().any(|&m| m != Method::TdbdaOracle);
    let mut failure = None;
    let model = if needs_fit {
        match fit(t1, t2, &FitOptions::new(k, cfg.center)) {
            Ok(m) => Some(m),
            Err(e) => {
                failure = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let oracle = if cfg.methods.contains(&Method::TdbdaOracle) {
        let fitted = if cfg.center {
            center_all(t1, t2, &tests)
                .and_then(|(a, b, x)| Ok((OracleModel::fit(&scenario.truth.basis(), &a, &b)?, Some(x))))
        } else {
            OracleModel::fit(&scenario.truth.basis(), t1, t2)
                .map(|m| (m, None))
                .map_err(Into::into)
        };
        match fitted {
            Ok(m) => Some(m),
            Err(e) => {
                failure.get_or_insert(e.to_string());
                None
            }
        }
    } else {
        None
    };

    let mut wrong = Vec::with_capacity(cfg.methods.len());
    for &m in &cfg.methods {
        let mut flags = [false; 2];
        let mut ok = true;
        for (i, x) in tests.iter().enumerate() {
            let d = if m == Method::TdbdaOracle {
                match &oracle {
                    Some((om, shifted)) => {
                        let x = shifted.as_ref().map_or(x, |s| &s[i]);
                        om.score(x).ok()
                    }
                    None => None,
                }
            } else {
                model.as_ref().and_then(|md| md.score(m, x).ok())
            };
            match d {
                Some(d) => flags[i] = d.label as usize != i + 1,
                None => ok = false,
            }
        }
        wrong.push(ok.then_some(flags));
    }
    let k_hat = match (cfg.k_policy, &model) {
        (KPolicy::Auto, Some(md)) => Some(md.k()),
        _ => None,
    };
    Ok(RepOutcome {
        wrong,
        k_hat,
        failure,
    })
}

/// Builds the scenario and runs the study on the current rayon pool.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<ExperimentReport> {
    let scenario = make_scenario(&cfg.scenario)?;
    run_monte_carlo(&scenario, cfg)
}

/// Runs the study for an already built scenario. Results depend only on the
/// configuration, not on the number of worker threads.
pub fn run_monte_carlo(scenario: &Scenario, cfg: &MonteCarloConfig) -> Result<ExperimentReport> {
    if cfg.methods.is_empty() {
        return Err(HarnessError::Config("no methods requested".into()));
    }
    let reps = cfg.scenario.replications;
    if reps == 0 {
        return Err(HarnessError::Config("replications must be positive".into()));
    }
    let fixed = if cfg.fixed_training {
        let mut rng = replication_rng(cfg.scenario.seed, FIXED_TRAINING_STREAM);
        Some(draw_training(scenario, &mut rng)?)
    } else {
        None
    };
    let outcomes: Vec<RepOutcome> = (0..reps as u64)
        .into_par_iter()
        .map(|r| run_rep(scenario, cfg, fixed.as_ref(), r))
        .collect::<Result<_>>()?;

    let results = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let mut errors = [0usize; 2];
            let mut trials = [0usize; 2];
            let mut skipped = 0;
            for o in &outcomes {
                match o.wrong[mi] {
                    Some(flags) => {
                        for i in 0..2 {
                            trials[i] += 1;
                            errors[i] += flags[i] as usize;
                        }
                    }
                    None => skipped += 1,
                }
            }
            MethodResult::from_counts(m, errors, trials, skipped)
        })
        .collect();

    let truth = &scenario.truth;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        kind: "monte_carlo".into(),
        config: ReportConfig {
            scenario: Some(cfg.scenario.id.to_string()),
            input: None,
            p: cfg.scenario.p,
            n1: scenario.n[0],
            n2: scenario.n[1],
            seed: Some(cfg.scenario.seed),
            replications: reps,
            methods: cfg.methods.clone(),
            k_policy: cfg.k_policy,
            center: cfg.center,
            training: if cfg.fixed_training { "fixed" } else { "fresh" }.into(),
        },
        results,
        oracle: Some(OracleSummary {
            delta: truth.delta,
            delta_a: truth.delta_a,
            k: truth.k,
            lambda1: truth.lambdas[0].clone(),
            lambda2: truth.lambdas[1].clone(),
            deltas: scenario.deltas,
        }),
        k_hat: tally_k(outcomes.iter().filter_map(|o| o.k_hat)),
        fit_failures: outcomes.iter().filter(|o| o.failure.is_some()).count(),
        failure_messages: first_messages(outcomes.iter().filter_map(|o| o.failure.clone())),
    })
}
