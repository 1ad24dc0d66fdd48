use serde_json::{json, Value};

use ncg_core::{load_scenario_str, load_scenario_value, run_scenario, verify, ExactElement, ScenarioError};

const K_U: &str = r#"{"terms": [{"m": 1, "n": 0, "coeff": {"re": "1"}}]}"#;

fn walk_elements<'a>(v: &'a Value, out: &mut Vec<&'a Value>) {
    match v {
        Value::Object(o) if o.contains_key("terms") && o.contains_key("mode") => out.push(v),
        Value::Object(o) => o.values().for_each(|x| walk_elements(x, out)),
        Value::Array(a) => a.iter().for_each(|x| walk_elements(x, out)),
        _ => {}
    }
}

#[test]
fn exact_report_elements_round_trip() {
    for text in [
        r#"{"preset": "qhm"}"#.to_string(),
        format!(r#"{{"theta": "1/3", "metric": {{"type": "conformal", "k": {K_U}, "k_inv": "monomial"}}}}"#),
    ] {
        let report = run_scenario(&load_scenario_str(&text).unwrap()).unwrap();
        let reparsed: Value = serde_json::from_str(&report.to_json_string()).unwrap();
        assert_eq!(reparsed, report.json);
        let mut elems = Vec::new();
        walk_elements(&reparsed, &mut elems);
        assert!(elems.len() > 10);
        for e in elems {
            let parsed = ExactElement::from_json(e).unwrap();
            assert_eq!(&parsed.to_json(), e);
        }
    }
}

#[test]
fn unit_factor_changes_nothing() {
    let plain = run_scenario(&load_scenario_value(&json!({"theta": "1/3"})).unwrap()).unwrap();
    let unit = run_scenario(
        &load_scenario_value(&json!({
            "theta": "1/3",
            "metric": {"type": "conformal", "k": {"terms": [{"m": 0, "n": 0, "coeff": {"re": "1"}}]}, "k_inv": "monomial"}
        }))
        .unwrap(),
    )
    .unwrap();
    for key in ["christoffel", "ricci", "scalar"] {
        assert_eq!(plain.json[key], unit.json[key], "{key}");
    }
}

#[test]
fn explicit_fields_override_presets() {
    let s = load_scenario_value(&json!({"preset": "qhm", "mode": "numeric", "label": "x"})).unwrap();
    assert_eq!(s.label, "x");
    assert_eq!(s.mode, ncg_core::Mode::Numeric);
    let r = run_scenario(&s).unwrap();
    assert!(r.pass, "{:?}", r.failures);
}

#[test]
fn explicit_inverse_is_checked() {
    // a wrong "inverse" is accepted as input but shows up as a residual
    let s = load_scenario_str(&format!(
        r#"{{"metric": {{"type": "conformal", "k": {K_U}, "k_inv": {K_U}}}}}"#
    ))
    .unwrap();
    let st = verify(&s);
    assert_eq!(st.code, 1);
    assert!(st.summary.iter().any(|l| l.contains("inverse")), "{:?}", st.summary);
}

#[test]
fn errors_carry_context() {
    let s = load_scenario_str(
        r#"{"metric": {"type": "conformal", "k": {"terms": [{"m": 0, "n": 0, "coeff": 1}, {"m": 1, "n": 0, "coeff": 1}]}, "k_inv": "monomial"}}"#,
    )
    .unwrap();
    let err = run_scenario(&s).unwrap_err();
    assert!(matches!(err, ScenarioError::Algebra { .. }));
    assert!(err.to_string().contains("monomial"));
    assert_eq!(verify(&s).code, 2);

    assert!(matches!(load_scenario_str("{not json"), Err(ScenarioError::Json(_))));
}
