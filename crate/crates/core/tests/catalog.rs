use phg_core::catalog::*;
use phg_core::GeometryError;

fn affine_text(g112: &str, g121: &str) -> String {
    format!(
        r#"{{
  "name": "skew",
  "kind": "affine",
  "n": 2,
  "domain": [[-1, 1], [-1, 1]],
  "components": {{
    "gamma": {{
      "1,1,1": "0", "1,1,2": "{g112}", "1,2,1": "{g121}", "1,2,2": "0",
      "2,1,1": "0", "2,1,2": "0", "2,2,2": "0"
    }}
  }}
}}"#
    )
}

#[test]
fn catalog_spans_all_kinds() {
    let cat = builtin_catalog();
    assert!(cat.len() >= 12);
    for kind in [Kind::Parallelism, Kind::Affine, Kind::Riemannian] {
        assert!(cat.iter().any(|s| s.kind == kind));
    }
    for s in &cat {
        let g = s.build().unwrap();
        assert_eq!((g.kind(), g.n()), (s.kind, s.n), "{}", s.name);
        assert!(s.expect_flat.is_some(), "{} has no flatness marker", s.name);
    }
}

#[test]
fn serialized_entry_round_trips_bitwise() {
    let spec = catalog_entry("axb").unwrap();
    let text = save_geometry(&spec);
    let back = load_geometry(&text).unwrap();
    assert_eq!(back, spec);
    assert_eq!(save_geometry(&back), text);
    for s in builtin_catalog() {
        assert_eq!(load_geometry(&save_geometry(&s)).unwrap(), s);
    }
}

#[test]
fn unequal_symmetric_components_are_rejected() {
    assert!(matches!(load_geometry(&affine_text("x1", "x2")), Err(GeometryError::Symmetry(_))));
    assert!(load_geometry(&affine_text("x1", "x1")).is_ok());
}

#[test]
fn malformed_expression_reports_position() {
    let text = affine_text("sin(x1", "sin(x1");
    match load_geometry(&text) {
        Err(GeometryError::Parse { line, column, message }) => {
            assert_eq!(line, 1);
            assert_eq!(column, 4);
            assert!(message.contains("gamma[1,1,2]"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn json_syntax_errors_carry_file_position() {
    match load_geometry("{\n  \"name\": \"x\",\n  \"kind\": \n}") {
        Err(GeometryError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn schema_violations_are_schema_errors() {
    let text = affine_text("0", "0").replace("\"n\": 2", "\"n\": 3");
    assert!(matches!(load_geometry(&text), Err(GeometryError::Schema(_))));
    let text = affine_text("0", "0").replace("\"gamma\"", "\"w\"");
    assert!(matches!(load_geometry(&text), Err(GeometryError::Schema(_))));
    let text = affine_text("0", "0").replace("\"kind\": \"affine\"", "\"kind\": \"projective\"");
    assert!(matches!(load_geometry(&text), Err(GeometryError::Schema(_))));
    let text = affine_text("0", "0").replace("\"name\"", "\"colour\": 1, \"name\"");
    assert!(matches!(load_geometry(&text), Err(GeometryError::Schema(_))));
}

#[test]
fn metric_files_default_to_levi_civita() {
    let text = r#"{"name": "cone", "kind": "riemannian", "n": 2, "domain": [[0.5, 2], [-1, 1]],
        "components": {"g": {"1,1": "1", "1,2": "0", "2,2": "x1^2"}}}"#;
    let spec = load_geometry(text).unwrap();
    match spec.build().unwrap() {
        Geometry::Riemannian(m) => {
            let gamma = m.gamma.gamma(&[1.5, 0.0]).unwrap();
            // the negated Christoffel symbols of the flat polar metric
            assert!((gamma.get(&[0, 1, 1]) - 1.5).abs() <= 1e-14);
            assert!((gamma.get(&[1, 0, 1]) + 1.0 / 1.5).abs() <= 1e-14);
        }
        _ => panic!("expected a metric pair"),
    }
}

#[test]
fn geometry_files_resolve_by_path() {
    let path = std::env::temp_dir().join(format!("phg-catalog-{}.json", std::process::id()));
    std::fs::write(&path, save_geometry(&catalog_entry("bump2").unwrap())).unwrap();
    let spec = resolve_geometry(path.to_str().unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(spec, catalog_entry("bump2").unwrap());
    assert_eq!(resolve_geometry("sphere2").unwrap().name, "sphere2");
    assert!(matches!(resolve_geometry("no-such-entry"), Err(GeometryError::Schema(_))));
}
