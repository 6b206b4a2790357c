use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spike_core::simgen::{ScenarioId, ScenarioSpec};
use spike_core::Method;
use spike_harness::classify::{classify, ClassifyOutcome};
use spike_harness::ingest::{ingest_csv, ingest_points, write_table, Orientation};
use spike_harness::json::write_json;
use spike_harness::loocv::{loocv, LoocvConfig};
use spike_harness::montecarlo::{monte_carlo, MonteCarloConfig};
use spike_harness::report::{ExperimentReport, KPolicy};
use spike_harness::spectra::{spectra_report, SpectraReport};
use spike_harness::{thread_pool, Result};

#[derive(Parser)]
#[command(
    name = "spike",
    version,
    about = "Distance-based discriminant analysis for strongly spiked HDLSS data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file (gzip accepted).
    #[arg(long)]
    input: PathBuf,
    /// Rows are features and columns are samples.
    #[arg(long)]
    features_as_rows: bool,
    /// Name of the label column (or row) holding 1/2 class labels.
    #[arg(long, default_value = "label")]
    label_col: String,
}

#[derive(Subcommand)]
enum Command {
    /// Per-class eigenvalue, contribution-ratio and spike-count report.
    Spectra {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        center: bool,
        /// JSON report; a plot-ready CSV is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-out error rates.
    Loocv {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "tdbda,dbda,dlda,dqda")]
        methods: String,
        /// auto, K1,K2 or fixed-from-full.
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long)]
        center: bool,
        /// CSV table; a JSON report with the same stem is written alongside.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit on one file and classify the observations of another.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        features_as_rows: bool,
        #[arg(long, default_value = "label")]
        label_col: String,
        #[arg(long, default_value = "tdbda,dbda,dlda,dqda")]
        methods: String,
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long)]
        center: bool,
        /// Predictions CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo error rates on a synthetic scenario.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1024)]
        p: usize,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "tdbda,tdbda_naive,tdbda_oracle,dbda")]
        methods: String,
        /// truth, auto or K1,K2.
        #[arg(long, default_value = "truth")]
        k: String,
        #[arg(long)]
        center: bool,
        /// Reuse one training set across replications.
        #[arg(long)]
        fixed_training: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn orientation(features_as_rows: bool) -> Orientation {
    if features_as_rows {
        Orientation::FeaturesAsRows
    } else {
        Orientation::SamplesAsRows
    }
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn write_experiment_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_table(path, &ExperimentReport::TABLE_HEADER, &report.table_rows())
}

fn print_summary(report: &ExperimentReport) {
    for r in &report.results {
        eprintln!(
            "{:<13} e1={:.4} e2={:.4} e={:.4} (se {:.4}){}",
            r.method.to_string(),
            r.e1,
            r.e2,
            r.e,
            r.se,
            if r.skipped > 0 {
                format!(" skipped={}", r.skipped)
            } else {
                String::new()
            }
        );
    }
    if report.fit_failures > 0 {
        eprintln!("fit failures: {}", report.fit_failures);
    }
}

fn run(cli: Cli) -> Result<()> {
    let pool = thread_pool()?;
    match cli.command {
        Command::Spectra { input, center, out } => {
            let data = ingest_csv(
                &input.input,
                orientation(input.features_as_rows),
                &input.label_col,
            )?;
            let report = pool.install(|| spectra_report(&data, center))?;
            write_json(&out, &report)?;
            write_table(
                &sibling(&out, "csv"),
                &SpectraReport::CSV_HEADER,
                &report.csv_rows(),
            )?;
            for c in &report.classes {
                eprintln!("class {}: n={} k_hat={}", c.class, c.n, c.k_hat);
            }
        }
        Command::Loocv {
            input,
            methods,
            k,
            center,
            out,
        } => {
            let cfg = LoocvConfig {
                methods: Method::parse_list(&methods)?,
                k_policy: k.parse()?,
                center,
            };
            let data = ingest_csv(
                &input.input,
                orientation(input.features_as_rows),
                &input.label_col,
            )?;
            let report = pool.install(|| loocv(&data, &cfg))?;
            write_experiment_csv(&out, &report)?;
            write_json(&sibling(&out, "json"), &report)?;
            print_summary(&report);
        }
        Command::Classify {
            train,
            test,
            features_as_rows,
            label_col,
            methods,
            k,
            center,
            out,
        } => {
            let methods = Method::parse_list(&methods)?;
            let k: KPolicy = k.parse()?;
            let o = orientation(features_as_rows);
            let train = ingest_csv(&train, o, &label_col)?;
            let (x, truth) = ingest_points(&test, o, &label_col)?;
            let outcome = classify(&train, &x, truth.as_deref(), &methods, k, center)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w:?}");
            }
            eprintln!("k = ({}, {})", outcome.k.0, outcome.k.1);
            match out {
                Some(path) => write_table(&path, &ClassifyOutcome::CSV_HEADER, &outcome.csv_rows())?,
                None => {
                    println!("{}", ClassifyOutcome::CSV_HEADER.join(","));
                    for r in outcome.csv_rows() {
                        println!("{}", r.join(","));
                    }
                }
            }
        }
        Command::Simulate {
            scenario,
            p,
            reps,
            seed,
            methods,
            k,
            center,
            fixed_training,
            out,
        } => {
            let id: ScenarioId = scenario.parse()?;
            let cfg = MonteCarloConfig {
                scenario: ScenarioSpec {
                    id,
                    p,
                    seed,
                    replications: reps,
                },
                methods: Method::parse_list(&methods)?,
                k_policy: k.parse()?,
                center,
                fixed_training,
            };
            let report = pool.install(|| monte_carlo(&cfg))?;
            write_json(&out, &report)?;
            print_summary(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spike: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
