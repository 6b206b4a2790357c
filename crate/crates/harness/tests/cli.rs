use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spike");

fn spike(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("SPIKE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Six features, seven samples per class; class 2 is shifted on even features.
fn dataset(dir: &Path, scale: f64) -> PathBuf {
    let mut body = String::from("f1,f2,f3,f4,f5,f6,label\n");
    for class in 1..=2 {
        for j in 0..7 {
            let row: Vec<String> = (0..6)
                .map(|i| {
                    let wobble = ((i * 5 + j * 3 + class) % 7) as f64 - 3.0;
                    let shift = if class == 2 && i % 2 == 0 { 4.0 } else { 0.0 };
                    ((wobble + shift) * scale).to_string()
                })
                .collect();
            body.push_str(&format!("{},{class}\n", row.join(",")));
        }
    }
    let path = dir.join(format!("data_{scale}.csv"));
    fs::write(&path, body).unwrap();
    path
}

/// Nonzero decimal literals appearing as JSON values.
fn nonzero_floats(text: &str) -> impl Iterator<Item = &str> {
    text.split([' ', ',', '\n', '[', ']'])
        .filter(|t| t.contains('.') && t.starts_with(|c: char| c == '-' || c.is_ascii_digit()))
        .filter(|t| t.chars().any(|c| ('1'..='9').contains(&c)))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectra_writes_json_and_sibling_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dataset(dir.path(), 1.0);
    let out = dir.path().join("spec.json");
    let o = spike(
        &[
            "spectra",
            "--input",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("spec.csv").exists());
}

#[test]
fn loocv_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dataset(dir.path(), 1.0);
    let out = dir.path().join("table.csv");
    let o = spike(
        &[
            "loocv",
            "--input",
            input.to_str().unwrap(),
            "--methods",
            "tdbda,dbda",
            "--center",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 3);
    let v = json(&dir.path().join("table.json"));
    assert_eq!(v["kind"], "loocv");
    assert_eq!(v["config"]["center"], true);
    assert_eq!(v["results"][0]["trials"], serde_json::json!([7, 7]));
}

#[test]
fn classify_prints_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dataset(dir.path(), 1.0);
    let path = input.to_str().unwrap();
    let o = spike(
        &["classify", "--train", path, "--test", path, "--methods", "dbda"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().next().unwrap(), "index,method,score,label,truth");
    assert_eq!(stdout.lines().count(), 15);
}

#[test]
fn simulate_is_reproducible_across_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = dir.path().join(format!("sim{threads}.json"));
        let o = spike(
            &[
                "simulate",
                "--scenario",
                "s2",
                "--p",
                "64",
                "--reps",
                "12",
                "--out",
                out.to_str().unwrap(),
            ],
            &[("SPIKE_THREADS", threads)],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out).unwrap()
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert!(nonzero_floats(&one).count() > 10);
    for token in nonzero_floats(&one) {
        let mantissa = token.split(['e', 'E']).next().unwrap();
        let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
        assert_eq!(digits.trim_start_matches('0').len(), 17, "{token}");
    }
    let v: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["config"]["replications"], 12);
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let out = out.to_str().unwrap();
    let input = dataset(dir.path(), 1.0);
    let input = input.to_str().unwrap();
    assert_eq!(
        code(&spike(&["simulate", "--scenario", "s9", "--out", out], &[])),
        2
    );
    assert_eq!(
        code(&spike(
            &[
                "simulate",
                "--scenario",
                "s1",
                "--p",
                "64",
                "--reps",
                "2",
                "--k",
                "x",
                "--out",
                out
            ],
            &[]
        )),
        2
    );
    assert_eq!(
        code(&spike(
            &["loocv", "--input", input, "--methods", "lda", "--out", out],
            &[]
        )),
        2
    );
    assert_eq!(code(&spike(&["frobnicate"], &[])), 2);
    for bad in ["0", "many", "-3"] {
        let o = spike(
            &[
                "simulate",
                "--scenario",
                "s1",
                "--p",
                "64",
                "--reps",
                "2",
                "--out",
                out,
            ],
            &[("SPIKE_THREADS", bad)],
        );
        assert_eq!(code(&o), 2, "SPIKE_THREADS={bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("SPIKE_THREADS"));
    }
}

#[test]
fn ingestion_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let out = out.to_str().unwrap();
    assert_eq!(
        code(&spike(
            &["spectra", "--input", "/nonexistent.csv", "--out", out],
            &[]
        )),
        3
    );
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,label\n1,1\n,2\n").unwrap();
    let o = spike(&["spectra", "--input", bad.to_str().unwrap(), "--out", out], &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn overflow_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dataset(dir.path(), 1e200);
    let out = dir.path().join("x.json");
    let o = spike(
        &[
            "spectra",
            "--input",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
