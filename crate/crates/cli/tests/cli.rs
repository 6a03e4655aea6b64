use phg_cli::{run_command, Outcome, EXIT_INVALID, EXIT_NOT_FLAT, EXIT_NUMERICAL, EXIT_OK};
use serde_json::Value;

fn run(args: &[&str]) -> Outcome {
    run_command(std::iter::once("phg").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

fn numbers(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| numbers(x, out)),
        Value::Object(m) => m.values().for_each(|x| numbers(x, out)),
        _ => {}
    }
}

#[test]
fn certify_sphere_is_flat() {
    let v = json(&["certify", "--geometry", "sphere2", "--json"]);
    assert_eq!(v["verdict"], "Flat");
    assert_eq!(v["consistent"], true);
}

#[test]
fn classify_mismatch_is_not_one_flat() {
    let out = run(&["classify", "--geometry", "mismatch2"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("NotOneFlat"), "{}", out.stdout);
    assert_eq!(json(&["classify", "--geometry", "bump2", "--json"])["class"], "OneFlatNonconstant");
}

#[test]
fn compute_translation_gamma_is_zero() {
    let v = json(&["compute", "--geometry", "trans2", "--object", "gamma", "--point", "0,0", "--json"]);
    let mut vals = Vec::new();
    numbers(&v["value"]["components"], &mut vals);
    assert_eq!(vals.len(), 8);
    assert!(vals.iter().all(|x| *x == 0.0));
    let text = run(&["compute", "--geometry", "trans2", "--object", "gamma", "--point", "0,0"]);
    assert!(text.stdout.contains("all 8 components are zero"));
}

#[test]
fn compute_reports_integrability_components() {
    let v = json(&["compute", "--geometry", "axb", "--object", "I", "--point", "1,0", "--json"]);
    let c = &v["value"]["components"];
    assert_eq!(c[1][0][1].as_f64(), Some(1.0));
    assert_eq!(c[1][1][0].as_f64(), Some(-1.0));
    assert_eq!(c[0][0][1].as_f64(), Some(0.0));
}

#[test]
fn compute_every_object_on_a_metric_pair() {
    for object in ["gamma", "I", "I1", "I2", "christoffel", "R", "r"] {
        let out = run(&["compute", "--geometry", "sphere2", "--object", object, "--point", "-0.2,0.3", "--json"]);
        assert_eq!(out.code, EXIT_OK, "{object}: {}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        let mut vals = Vec::new();
        numbers(&v, &mut vals);
        assert!(vals.iter().all(|x| x.is_finite()));
        if object == "R" || object == "r" {
            // flat pair: curvature vanishes in both forms
            let mut curv = Vec::new();
            numbers(&v["value"], &mut curv);
            assert!(curv.iter().all(|x| x.abs() <= 1e-10), "{object}");
        }
    }
}

#[test]
fn metric_objects_need_a_metric() {
    let out = run(&["compute", "--geometry", "pert2", "--object", "I1", "--point", "0,0"]);
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("Riemannian"));
}

#[test]
fn expect_flat_gates_the_exit_code() {
    assert_eq!(run(&["certify", "--geometry", "axb", "--expect-flat"]).code, EXIT_OK);
    let out = run(&["certify", "--geometry", "pert2", "--expect-flat"]);
    assert_eq!(out.code, EXIT_NOT_FLAT);
    assert!(out.stdout.contains("NotFlat"));
    assert_eq!(run(&["certify", "--geometry", "pert2"]).code, EXIT_OK);
}

#[test]
fn whole_catalog_matches_its_markers() {
    let out = run(&["certify", "--all-catalog", "--expect-flat", "--samples", "30"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(out.stdout.lines().count(), 12);
    let v = json(&["lie3", "--all-catalog", "--samples", "30", "--json"]);
    assert!(v.as_array().unwrap().iter().all(|e| e["agree"] == true));
}

#[test]
fn invalid_input_exits_with_one() {
    let cases: [&[&str]; 7] = [
        &["certify"],
        &["certify", "--geometry", "no-such-geometry"],
        &["frobnicate"],
        &["compute", "--geometry", "trans2", "--object", "gamma", "--point", "0"],
        &["compute", "--geometry", "trans2", "--object", "gamma", "--point", "5,5"],
        &["compute", "--geometry", "trans2", "--object", "curvature", "--point", "0,0"],
        &["classify", "--geometry", "trans2"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.code, EXIT_INVALID, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failures_exit_with_two() {
    // loops this large carry the start state out of the chart
    let out = run(&["holonomy", "--geometry", "trans2", "--point", "0.5,0.5", "--loop-size", "0.9"]);
    assert_eq!(out.code, EXIT_NUMERICAL, "{}", out.stderr);
}

#[test]
fn geometry_files_are_accepted() {
    let path = std::env::temp_dir().join(format!("phg-cli-{}.json", std::process::id()));
    std::fs::write(
        &path,
        r#"{"name": "cone", "kind": "riemannian", "n": 2, "domain": [[0.5, 2], [-1, 1]],
            "components": {"g": {"1,1": "1", "1,2": "0", "2,2": "x1^2"}}}"#,
    )
    .unwrap();
    let v = json(&["classify", "--geometry", path.to_str().unwrap(), "--json"]);
    let report = json(&["report", "--geometry", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(v["class"], "FlatPHG");
    assert_eq!(report["verdict"], "Flat");
    let broken = std::env::temp_dir().join(format!("phg-cli-bad-{}.json", std::process::id()));
    std::fs::write(&broken, "{\"name\": ").unwrap();
    let out = run(&["certify", "--geometry", broken.to_str().unwrap()]);
    std::fs::remove_file(&broken).ok();
    assert_eq!(out.code, EXIT_INVALID);
    assert!(out.stderr.contains("parse error"));
}

#[test]
fn reports_have_the_published_shape() {
    for name in ["pert2", "affine-sphere", "sphere2", "mismatch2"] {
        let v = json(&["report", "--geometry", name, "--seed", "7", "--samples", "30"]);
        for key in ["geometry", "seed", "tolerances", "evidence", "verdict", "checks"] {
            assert!(v.get(key).is_some(), "{name} lacks {key}");
        }
        for key in ["I_max", "R_max", "lin_max", "holonomy"] {
            assert!(v["evidence"][key].is_number());
        }
        assert_eq!(v.get("fit").is_some(), name.ends_with('2') && name != "pert2");
        for c in v["checks"].as_array().unwrap() {
            assert!(c["name"].is_string() && c["pass"].is_boolean() && c["value"].is_number() && c["tol"].is_number());
        }
        let mut vals = Vec::new();
        numbers(&v, &mut vals);
        assert!(vals.iter().all(|x| x.is_finite()));
        // verdict follows from the recorded maxima
        let tol = v["tolerances"]["flatness"].as_f64().unwrap();
        let flat = ["R_max", "lin_max", "holonomy"].iter().all(|k| v["evidence"][k].as_f64().unwrap() <= tol);
        assert_eq!(v["verdict"], if flat { "Flat" } else { "NotFlat" });
    }
}

#[test]
fn holonomy_reports_curvature_slice() {
    let v = json(&["holonomy", "--geometry", "pert2", "--point", "0.5,0.5", "--loop-size", "0.01", "--json"]);
    let l = &v["loops"][0];
    assert!(l["mismatch"].as_f64().unwrap() <= 0.05);
    assert_eq!(l["plane"], serde_json::json!([1, 2]));
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("certify"));
}
