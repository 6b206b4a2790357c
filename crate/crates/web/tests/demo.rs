use serde_json::Value;
use spike_web::{analyze_json, simulate_json, spectrum_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn spectrum_view_is_reproducible_and_ordered() {
    let a = spectrum_json(400, 30, 300.0, 3).unwrap();
    assert_eq!(a, spectrum_json(400, 30, 300.0, 3).unwrap());
    let v = parse(a);
    let raw = v["lambda_hat"].as_array().unwrap();
    let nr = v["lambda_tilde"].as_array().unwrap();
    assert_eq!(v["true_eigvals"][0], 300.0);
    for (r, t) in raw.iter().zip(nr) {
        assert!(t.as_f64().unwrap() <= r.as_f64().unwrap());
    }
    assert!(v["align_nr"].as_f64().unwrap() >= v["align_raw"].as_f64().unwrap());
}

#[test]
fn spectrum_rejects_out_of_range_inputs() {
    assert!(spectrum_json(2, 30, 10.0, 0).is_err());
    assert!(spectrum_json(100, 3, 10.0, 0).is_err());
    assert!(spectrum_json(100, 30, f64::NAN, 0).is_err());
    assert!(spectrum_json(100_000, 30, 10.0, 0).is_err());
}

#[test]
fn simulation_reports_every_method() {
    let v = parse(simulate_json("s1", 64, 20, 5, false).unwrap());
    let rates = v["rates"].as_array().unwrap();
    assert_eq!(rates.len(), 6);
    for r in rates {
        let (e1, e2, e) = (
            r["e1"].as_f64().unwrap(),
            r["e2"].as_f64().unwrap(),
            r["e"].as_f64().unwrap(),
        );
        assert!((0.0..=1.0).contains(&e1) && (0.0..=1.0).contains(&e2));
        assert_eq!(e, (e1 + e2) / 2.0);
        // 20 replications: every rate is a multiple of 1/20.
        assert!((e1 * 20.0 - (e1 * 20.0).round()).abs() < 1e-12);
    }
    assert_eq!(v["k"], serde_json::json!([2, 2]));
    assert!(simulate_json("s7", 64, 20, 5, false).is_err());
    assert!(simulate_json("s1", 8, 20, 5, false).is_err());
}

#[test]
fn analysis_of_a_small_table() {
    // Rows are observations; two features.
    let values = [
        1.0, 0.0, 2.0, 0.5, 3.0, 1.0, 4.0, 1.2, 5.0, 2.0, //
        0.0, 5.0, 0.5, 4.0, 1.0, 6.0, 0.2, 5.5,
    ];
    let labels = [1, 1, 1, 1, 1, 2, 2, 2, 2];
    let v = parse(analyze_json(&values, &labels, 2).unwrap());
    assert_eq!(v[0]["n"], 5);
    assert_eq!(v[1]["n"], 4);
    assert!(analyze_json(&values[1..], &labels, 2).is_err());
    assert!(analyze_json(&values[..16], &labels[..8], 2).is_err());
}
