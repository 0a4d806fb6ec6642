use serde_json::Value;
use wilks_wasm::{fit_random_graph, power_curve, qq_points};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn fit_document() {
    let v = parse(fit_random_graph(150, 0.1, 3));
    assert_eq!(v["n"], 150);
    assert_eq!(v["beta_hat"].as_array().unwrap().len(), 150);
    assert_eq!(v["degrees"].as_array().unwrap().len(), 150);
    assert!(v["max_abs_error"].as_f64().unwrap() < 1.5);
    assert_eq!(fit_random_graph(150, 0.1, 3), fit_random_graph(150, 0.1, 3));
}

#[test]
fn qq_document() {
    let v = parse(qq_points(40, 0.1, 30, 5));
    assert_eq!(v["r"], 40);
    let e = v["empirical"].as_array().unwrap();
    assert_eq!(e.len(), v["reps_effective"].as_u64().unwrap() as usize);
    assert_eq!(e.len(), v["normal_q"].as_array().unwrap().len());
}

#[test]
fn power_document() {
    let v = parse(power_curve("bt", 20, 4, 2, 20, 1, 1.0, 2));
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(pts[0]["c"], 0.0);
    assert_eq!(pts[2]["c"], 1.0);
    assert!(pts.iter().all(|p| p["wald"].is_number()));
}

#[test]
fn errors_are_json() {
    let v = parse(power_curve("gamma", 20, 4, 2, 20, 1, 1.0, 2));
    assert_eq!(v["error"], "Domain");
    let v = parse(fit_random_graph(2, 0.0, 1));
    assert_eq!(v["error"], "InvalidScenario");
    let v = parse(qq_points(100_000, 0.0, 10, 1));
    assert_eq!(v["error"], "InvalidScenario");
}
