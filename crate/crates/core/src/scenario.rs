//! Scenario files: parsing, preset expansion and the end-to-end run.

use std::fmt;
use std::path::Path;

use serde_json::{Map, Value};

use crate::algebra::AlgebraElement;
use crate::connection::Tolerance;
use crate::error::ScenarioError;
use crate::scalars::{Coefficient, ComplexFloat, GaussianRational, Rational, Theta};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    NcTorus,
    Qhm,
    CommutativeTorus,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::NcTorus, Preset::Qhm, Preset::CommutativeTorus];

    pub fn name(self) -> &'static str {
        match self {
            Preset::NcTorus => "nc-torus",
            Preset::Qhm => "qhm",
            Preset::CommutativeTorus => "commutative-torus",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::NcTorus => "noncommutative 2-torus, flat base connection, theta = 1/4 unless given",
            Preset::Qhm => "rank-3 quantum Heisenberg calculus, base connection nabla0(e3) = -e1⊗e2",
            Preset::CommutativeTorus => "ordinary 2-torus (theta = 0), flat base connection",
        }
    }

    pub fn parse(s: &str) -> Result<Preset, ScenarioError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ScenarioError::UnknownPreset(s.to_string()))
    }

    pub fn is_torus(self) -> bool {
        !matches!(self, Preset::Qhm)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Numeric,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Numeric => "numeric",
        }
    }
}

/// How `k⁻¹` is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum InverseSpec {
    Explicit(Value),
    Monomial,
    Neumann { order: usize, tolerance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetricInput {
    Diagonal,
    Conformal { k: Value, k_inv: InverseSpec },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseInput {
    Flat,
    QhmNabla0,
    /// Γ^i_jk as nested arrays `[i][j][k]` of element JSON.
    Table(Vec<Value>),
}

/// Element-valued entries are kept as validated JSON and parsed into the
/// scenario's coefficient type when it runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeInput {
    pub i: usize,
    pub j: usize,
    pub a: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub delta: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outputs {
    pub closed_form: bool,
    pub reference: bool,
}

/// A fully resolved scenario: preset defaults applied, every field checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub preset: Preset,
    pub theta: Theta,
    pub mode: Mode,
    pub metric: MetricInput,
    pub base: BaseInput,
    pub probes: Option<Vec<ProbeInput>>,
    pub perturb: Vec<Perturbation>,
    /// Sign of `d(e₃) = ±e₁∧e₂` on the Heisenberg calculus; `None` tries both.
    pub d_e3_sign: Option<i64>,
    pub tolerance_multiplier: Option<f64>,
    pub outputs: Outputs,
}

impl Scenario {
    pub fn rank(&self) -> usize {
        if self.preset.is_torus() {
            2
        } else {
            3
        }
    }

    /// Scenario value, then `NCG_TOLERANCE_MULT`, then the default.
    pub fn effective_multiplier(&self) -> f64 {
        self.tolerance_multiplier.unwrap_or_else(Tolerance::multiplier_from_env)
    }

    /// Canonical JSON echo of the resolved scenario.
    pub fn to_json(&self) -> Value {
        let theta = match &self.theta {
            Theta::Exact(r) => Value::String(r.to_string()),
            Theta::Float(x) => serde_json::json!(x),
        };
        let metric = match &self.metric {
            MetricInput::Diagonal => serde_json::json!({ "type": "diagonal" }),
            MetricInput::Conformal { k, k_inv } => {
                let inv = match k_inv {
                    InverseSpec::Explicit(v) => v.clone(),
                    InverseSpec::Monomial => Value::String("monomial".into()),
                    InverseSpec::Neumann { order, tolerance } => {
                        serde_json::json!({ "neumann": { "order": order, "tolerance": tolerance } })
                    }
                };
                serde_json::json!({ "type": "conformal", "k": k, "k_inv": inv })
            }
        };
        let base = match &self.base {
            BaseInput::Flat => Value::String("flat".into()),
            BaseInput::QhmNabla0 => Value::String("qhm-nabla0".into()),
            BaseInput::Table(t) => serde_json::json!({ "christoffel": t }),
        };
        let mut outputs = vec!["definitional"];
        if self.outputs.closed_form {
            outputs.push("closed-form");
        }
        if self.outputs.reference {
            outputs.push("reference");
        }
        let mut m = Map::new();
        m.insert("label".into(), Value::String(self.label.clone()));
        m.insert("preset".into(), Value::String(self.preset.name().into()));
        m.insert("theta".into(), theta);
        m.insert("mode".into(), Value::String(self.mode.name().into()));
        m.insert("metric".into(), metric);
        m.insert("base_connection".into(), base);
        m.insert("outputs".into(), serde_json::json!(outputs));
        if let Some(p) = &self.probes {
            let probes: Vec<Value> = p
                .iter()
                .map(|p| serde_json::json!({ "i": p.i + 1, "j": p.j + 1, "a": p.a }))
                .collect();
            m.insert("probes".into(), Value::Array(probes));
        }
        if !self.perturb.is_empty() {
            let items: Vec<Value> = self
                .perturb
                .iter()
                .map(|p| serde_json::json!({ "i": p.i + 1, "j": p.j + 1, "k": p.k + 1, "delta": p.delta }))
                .collect();
            m.insert("perturb".into(), Value::Array(items));
        }
        if let Some(s) = self.d_e3_sign {
            m.insert("d_e3_sign".into(), serde_json::json!(s));
        }
        if let Some(t) = self.tolerance_multiplier {
            m.insert("tolerance".into(), serde_json::json!({ "multiplier": t }));
        }
        Value::Object(m)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "label",
    "preset",
    "theta",
    "mode",
    "metric",
    "base_connection",
    "probes",
    "perturb",
    "d_e3_sign",
    "tolerance",
    "outputs",
];

fn schema(path: &str, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::schema(path, msg)
}

fn reject_unknown(obj: &Map<String, Value>, known: &[&str], path: &str) -> Result<(), ScenarioError> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(schema(&format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn parse_theta(v: &Value) -> Result<Theta, ScenarioError> {
    match v {
        Value::String(s) => s
            .parse::<Rational>()
            .map(Theta::Exact)
            .map_err(|e| schema("$.theta", e.to_string())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Theta::Exact(Rational::from_integer(i)))
            } else {
                let x = n.as_f64().filter(|x| x.is_finite());
                x.map(Theta::Float)
                    .ok_or_else(|| schema("$.theta", "not a finite number"))
            }
        }
        other => Err(schema(
            "$.theta",
            format!("expected a rational string or a number, got {other}"),
        )),
    }
}

/// Element JSON in a scenario of the given mode. Exact elements are also
/// accepted in numeric scenarios and converted.
fn check_element(v: &Value, mode: Mode, path: &str) -> Result<Value, ScenarioError> {
    let mut v = v.clone();
    if mode == Mode::Numeric {
        if let Some(obj) = v.as_object_mut() {
            if obj.get("mode").and_then(Value::as_str) == Some("exact") {
                obj.remove("mode");
            }
        }
    }
    let parsed = match mode {
        Mode::Exact => AlgebraElement::<GaussianRational>::from_json(&v).map(|_| ()),
        Mode::Numeric => AlgebraElement::<ComplexFloat>::from_json(&v).map(|_| ()),
    };
    parsed.map_err(|(sub, msg)| schema(&format!("{path}{sub}"), msg))?;
    Ok(v)
}

/// Parse an element that has already passed [`check_element`].
pub(crate) fn element<C: Coefficient>(v: &Value) -> AlgebraElement<C> {
    AlgebraElement::from_json(v).expect("validated at load time")
}

fn index(v: Option<&Value>, rank: usize, path: &str) -> Result<usize, ScenarioError> {
    let i = v
        .and_then(Value::as_u64)
        .ok_or_else(|| schema(path, "expected a positive integer"))? as usize;
    if i == 0 || i > rank {
        return Err(schema(path, format!("index {i} outside 1..={rank}")));
    }
    Ok(i - 1)
}

fn parse_metric(v: Option<&Value>, mode: Mode) -> Result<MetricInput, ScenarioError> {
    let Some(v) = v else {
        return Ok(MetricInput::Diagonal);
    };
    let obj = v.as_object().ok_or_else(|| schema("$.metric", "expected an object"))?;
    match obj.get("type").and_then(Value::as_str) {
        Some("diagonal") => {
            reject_unknown(obj, &["type"], "$.metric")?;
            Ok(MetricInput::Diagonal)
        }
        Some("conformal") => {
            reject_unknown(obj, &["type", "k", "k_inv"], "$.metric")?;
            let k = obj.get("k").ok_or_else(|| schema("$.metric.k", "missing"))?;
            let k = check_element(k, mode, "$.metric.k")?;
            let k_inv = match obj.get("k_inv") {
                None => return Err(schema("$.metric.k_inv", "missing")),
                Some(Value::String(s)) if s == "monomial" => InverseSpec::Monomial,
                Some(Value::Object(o)) if o.contains_key("neumann") => {
                    if mode == Mode::Exact {
                        return Err(schema("$.metric.k_inv.neumann", "Neumann inversion needs numeric mode"));
                    }
                    let n = &o["neumann"];
                    let order = n
                        .get("order")
                        .and_then(Value::as_u64)
                        .filter(|o| *o > 0)
                        .ok_or_else(|| schema("$.metric.k_inv.neumann.order", "expected a positive integer"))?;
                    let tolerance = n
                        .get("tolerance")
                        .and_then(Value::as_f64)
                        .filter(|t| t.is_finite() && *t > 0.0)
                        .ok_or_else(|| schema("$.metric.k_inv.neumann.tolerance", "expected a positive number"))?;
                    InverseSpec::Neumann {
                        order: order as usize,
                        tolerance,
                    }
                }
                Some(other) => InverseSpec::Explicit(check_element(other, mode, "$.metric.k_inv")?),
            };
            Ok(MetricInput::Conformal { k, k_inv })
        }
        _ => Err(schema("$.metric.type", "expected \"diagonal\" or \"conformal\"")),
    }
}

fn parse_base(v: Option<&Value>, preset: Preset, mode: Mode) -> Result<BaseInput, ScenarioError> {
    let rank: usize = if preset.is_torus() { 2 } else { 3 };
    match v {
        None if preset == Preset::Qhm => Ok(BaseInput::QhmNabla0),
        None => Ok(BaseInput::Flat),
        Some(Value::String(s)) if s == "flat" => Ok(BaseInput::Flat),
        Some(Value::String(s)) if s == "qhm-nabla0" => {
            if preset != Preset::Qhm {
                return Err(schema("$.base_connection", "qhm-nabla0 needs the qhm preset"));
            }
            Ok(BaseInput::QhmNabla0)
        }
        Some(Value::Object(o)) => {
            reject_unknown(o, &["christoffel"], "$.base_connection")?;
            let path = "$.base_connection.christoffel";
            let table = o.get("christoffel").ok_or_else(|| schema(path, "missing"))?;
            let mut flat = Vec::with_capacity(rank.pow(3));
            let rows = table
                .as_array()
                .filter(|a| a.len() == rank)
                .ok_or_else(|| schema(path, format!("expected {rank} rows")))?;
            for (i, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|a| a.len() == rank)
                    .ok_or_else(|| schema(&format!("{path}[{i}]"), format!("expected {rank} rows")))?;
                for (j, col) in row.iter().enumerate() {
                    let col = col
                        .as_array()
                        .filter(|a| a.len() == rank)
                        .ok_or_else(|| schema(&format!("{path}[{i}][{j}]"), format!("expected {rank} entries")))?;
                    for (k, e) in col.iter().enumerate() {
                        flat.push(check_element(e, mode, &format!("{path}[{i}][{j}][{k}]"))?);
                    }
                }
            }
            Ok(BaseInput::Table(flat))
        }
        Some(other) => Err(schema(
            "$.base_connection",
            format!("expected \"flat\", \"qhm-nabla0\" or {{\"christoffel\": ...}}, got {other}"),
        )),
    }
}

/// Parse and resolve scenario JSON.
pub fn load_scenario_value(v: &Value) -> Result<Scenario, ScenarioError> {
    let obj = v.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    reject_unknown(obj, KNOWN_KEYS, "$")?;

    let preset = match obj.get("preset") {
        None => Preset::NcTorus,
        Some(Value::String(s)) => Preset::parse(s)?,
        Some(other) => return Err(schema("$.preset", format!("expected a string, got {other}"))),
    };
    let mode = match obj.get("mode").map(|m| m.as_str()) {
        None => Mode::Exact,
        Some(Some("exact")) => Mode::Exact,
        Some(Some("numeric")) => Mode::Numeric,
        Some(_) => return Err(schema("$.mode", "expected \"exact\" or \"numeric\"")),
    };
    let theta = match obj.get("theta") {
        Some(t) => parse_theta(t)?,
        None => Theta::Exact(match preset {
            Preset::NcTorus => Rational::new(1, 4),
            _ => Rational::from_integer(0),
        }),
    };
    if preset == Preset::CommutativeTorus && theta.to_f64() != 0.0 {
        return Err(schema("$.theta", "the commutative torus has theta = 0"));
    }
    let label = match obj.get("label") {
        None => preset.name().to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("$.label", "expected a string")),
    };
    let metric = parse_metric(obj.get("metric"), mode)?;
    let base = parse_base(obj.get("base_connection"), preset, mode)?;
    let rank = if preset.is_torus() { 2 } else { 3 };

    let probes = match obj.get("probes") {
        None => None,
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            for (idx, p) in items.iter().enumerate() {
                let path = format!("$.probes[{idx}]");
                let po = p.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
                reject_unknown(po, &["i", "j", "a"], &path)?;
                let a = match po.get("a") {
                    None => AlgebraElement::<GaussianRational>::one().to_json(),
                    Some(a) => check_element(a, mode, &format!("{path}.a"))?,
                };
                out.push(ProbeInput {
                    i: index(po.get("i"), rank, &format!("{path}.i"))?,
                    j: index(po.get("j"), rank, &format!("{path}.j"))?,
                    a,
                });
            }
            Some(out)
        }
        Some(_) => return Err(schema("$.probes", "expected an array")),
    };

    let perturb = match obj.get("perturb") {
        None => Vec::new(),
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            for (idx, p) in items.iter().enumerate() {
                let path = format!("$.perturb[{idx}]");
                let po = p.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
                reject_unknown(po, &["i", "j", "k", "delta"], &path)?;
                let delta = po
                    .get("delta")
                    .ok_or_else(|| schema(&format!("{path}.delta"), "missing"))?;
                out.push(Perturbation {
                    i: index(po.get("i"), rank, &format!("{path}.i"))?,
                    j: index(po.get("j"), rank, &format!("{path}.j"))?,
                    k: index(po.get("k"), rank, &format!("{path}.k"))?,
                    delta: check_element(delta, mode, &format!("{path}.delta"))?,
                });
            }
            out
        }
        Some(_) => return Err(schema("$.perturb", "expected an array")),
    };

    let d_e3_sign = match obj.get("d_e3_sign") {
        None => None,
        Some(v) => match v.as_i64() {
            Some(s @ (1 | -1)) if preset == Preset::Qhm => Some(s),
            Some(1 | -1) => return Err(schema("$.d_e3_sign", "only meaningful for the qhm preset")),
            _ => return Err(schema("$.d_e3_sign", "expected 1 or -1")),
        },
    };

    let tolerance_multiplier = match obj.get("tolerance") {
        None => None,
        Some(Value::Number(n)) => Some(n.as_f64().unwrap_or(f64::NAN)),
        Some(Value::Object(o)) => {
            reject_unknown(o, &["multiplier"], "$.tolerance")?;
            Some(o.get("multiplier").and_then(Value::as_f64).unwrap_or(f64::NAN))
        }
        Some(_) => Some(f64::NAN),
    };
    if let Some(m) = tolerance_multiplier {
        if !(m.is_finite() && m > 0.0) {
            return Err(schema("$.tolerance.multiplier", "expected a positive number"));
        }
    }

    let outputs = match obj.get("outputs") {
        None => Outputs {
            closed_form: true,
            reference: true,
        },
        Some(Value::Array(items)) => {
            let mut o = Outputs {
                closed_form: false,
                reference: false,
            };
            for (idx, item) in items.iter().enumerate() {
                match item.as_str() {
                    Some("definitional") => {}
                    Some("closed-form") => o.closed_form = true,
                    Some("reference") => o.reference = true,
                    _ => {
                        return Err(schema(
                            &format!("$.outputs[{idx}]"),
                            "expected \"definitional\", \"closed-form\" or \"reference\"",
                        ))
                    }
                }
            }
            o
        }
        Some(_) => return Err(schema("$.outputs", "expected an array")),
    };

    Ok(Scenario {
        label,
        preset,
        theta,
        mode,
        metric,
        base,
        probes,
        perturb,
        d_e3_sign,
        tolerance_multiplier,
        outputs,
    })
}

pub fn load_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let v: Value = serde_json::from_str(text)?;
    load_scenario_value(&v)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn preset_expansion() {
        let s = load_scenario_value(&json!({"preset": "qhm"})).unwrap();
        assert_eq!(s.preset, Preset::Qhm);
        assert_eq!(s.mode, Mode::Exact);
        assert_eq!(s.metric, MetricInput::Diagonal);
        assert_eq!(s.base, BaseInput::QhmNabla0);
    }

    #[test]
    fn torus_conformal() {
        let s = load_scenario_value(&json!({
            "preset": "nc-torus",
            "theta": "1/4",
            "metric": {"type": "conformal", "k": {"terms": [{"m": 1, "n": 0, "coeff": {"re": "1"}}]}, "k_inv": "monomial"}
        }))
        .unwrap();
        assert_eq!(s.theta, Theta::Exact(Rational::new(1, 4)));
        assert!(matches!(
            s.metric,
            MetricInput::Conformal {
                k_inv: InverseSpec::Monomial,
                ..
            }
        ));
        assert_eq!(s.base, BaseInput::Flat);
    }

    #[test]
    fn bad_theta() {
        let err = load_scenario_value(&json!({"theta": "abc"})).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Schema { ref path, .. } if path == "$.theta"),
            "{err}"
        );
    }

    #[test]
    fn unknown_preset_and_fields() {
        assert!(matches!(
            load_scenario_value(&json!({"preset": "sphere"})),
            Err(ScenarioError::UnknownPreset(_))
        ));
        let err = load_scenario_value(&json!({"presett": "qhm"})).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema { ref path, .. } if path == "$.presett"));
    }

    #[test]
    fn element_paths_in_errors() {
        let err = load_scenario_value(&json!({
            "metric": {"type": "conformal", "k": {"terms": [{"m": 1, "n": "x", "coeff": {"re": "1"}}]}, "k_inv": "monomial"}
        }))
        .unwrap_err();
        match err {
            ScenarioError::Schema { path, .. } => assert_eq!(path, "$.metric.k.terms[0].n"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn neumann_needs_numeric() {
        let k = json!({"terms": [{"m": 0, "n": 0, "coeff": {"re": "1"}}]});
        let v = json!({"metric": {"type": "conformal", "k": k, "k_inv": {"neumann": {"order": 4, "tolerance": 1e-6}}}});
        assert!(load_scenario_value(&v).is_err());
        let mut v = v;
        v["mode"] = json!("numeric");
        assert!(load_scenario_value(&v).is_ok());
    }

    #[test]
    fn commutative_torus_pins_theta() {
        assert!(load_scenario_value(&json!({"preset": "commutative-torus", "theta": "1/3"})).is_err());
        let s = load_scenario_value(&json!({"preset": "commutative-torus"})).unwrap();
        assert_eq!(s.theta.to_f64(), 0.0);
    }

    #[test]
    fn echo_is_canonical() {
        let s = load_scenario_value(&json!({"preset": "qhm", "tolerance": 5})).unwrap();
        let again = load_scenario_value(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }
}
