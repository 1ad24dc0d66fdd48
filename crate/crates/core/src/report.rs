//! Running a scenario end to end: connection, residuals, curvature paths,
//! paper cross-checks, and the JSON / table renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::algebra::{AlgebraElement, InvertiblePair};
use crate::calculus::{CalculusDescriptor, TensorCube};
use crate::connection::{
    conformal_lc_connection_unchecked, default_probes, qhm_lc_connection, qhm_nabla0, residual_report, tt_from_nabla0,
    Connection, Probe, ResidualReport, TTensor, Tolerance,
};
use crate::curvature::{
    closed_form_curvature, curvature_operator, ricci, scalar_curvature, torus_conformal_reference, Matrix,
};
use crate::error::{AlgebraError, ScenarioError};
use crate::metric::MetricSpec;
use crate::scalars::{Coefficient, ComplexFloat, GaussianRational, Magnitude, Rational, Theta};
use crate::scenario::{element, load_scenario, BaseInput, InverseSpec, MetricInput, Mode, Preset, Scenario};

/// Coefficient fields a scenario can run in.
pub trait ScenarioField: Coefficient {
    fn neumann(k: &AlgebraElement<Self>, order: usize, tolerance: f64) -> Result<InvertiblePair<Self>, AlgebraError>;
}

impl ScenarioField for GaussianRational {
    fn neumann(_: &AlgebraElement<Self>, _: usize, _: f64) -> Result<InvertiblePair<Self>, AlgebraError> {
        // rejected at load time; Neumann series are a numeric-mode tool
        Err(AlgebraError::ModeMismatch)
    }
}

impl ScenarioField for ComplexFloat {
    fn neumann(k: &AlgebraElement<Self>, order: usize, tolerance: f64) -> Result<InvertiblePair<Self>, AlgebraError> {
        InvertiblePair::neumann_inverse(k, order, tolerance)
    }
}

/// Outcome of [`run_scenario`].
#[derive(Clone, Debug)]
pub struct Report {
    pub json: Value,
    /// Every residual within tolerance and every requested path agreement holds.
    pub pass: bool,
    pub failures: Vec<String>,
    pub table: String,
}

impl Report {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("report JSON serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitStatus {
    /// 0 pass, 1 residual or path failure, 2 input error.
    pub code: i32,
    pub summary: Vec<String>,
}

pub fn run_scenario(s: &Scenario) -> Result<Report, ScenarioError> {
    match s.mode {
        Mode::Exact => run::<GaussianRational>(s),
        Mode::Numeric => run::<ComplexFloat>(s),
    }
}

pub fn verify(s: &Scenario) -> ExitStatus {
    match run_scenario(s) {
        Err(e) => ExitStatus {
            code: 2,
            summary: vec![format!("error: {e}")],
        },
        Ok(r) if r.pass => ExitStatus {
            code: 0,
            summary: vec![format!(
                "PASS {}: all residuals within tolerance, all paths agree",
                s.label
            )],
        },
        Ok(r) => ExitStatus {
            code: 1,
            summary: r.failures.iter().map(|f| format!("FAIL {}: {f}", s.label)).collect(),
        },
    }
}

/// [`verify`] starting from a file; unreadable or invalid input gives code 2.
pub fn verify_path(path: impl AsRef<Path>) -> ExitStatus {
    match load_scenario(path) {
        Ok(s) => verify(&s),
        Err(e) => ExitStatus {
            code: 2,
            summary: vec![format!("error: {e}")],
        },
    }
}

fn ctx_algebra(context: &str) -> impl FnOnce(AlgebraError) -> ScenarioError + '_ {
    move |source| ScenarioError::Algebra {
        context: context.to_string(),
        source,
    }
}

fn base_connection<C: ScenarioField>(desc: &Arc<CalculusDescriptor>, base: &BaseInput) -> Connection<C> {
    match base {
        BaseInput::Flat => Connection::flat(desc),
        BaseInput::QhmNabla0 => qhm_nabla0(desc),
        BaseInput::Table(entries) => {
            Connection::new(TensorCube::from_coeffs(desc, entries.iter().map(element).collect()))
        }
    }
}

fn torsion_free<C: ScenarioField>(conn: &Connection<C>, tol: &Tolerance) -> bool {
    conn.torsion().iter().all(|t| tol.accepts(C::EXACT, &t.l1_norm()))
}

/// The calculus, plus a record of which `d(e₃)` signs were tried.
fn calculus<C: ScenarioField>(s: &Scenario) -> (Arc<CalculusDescriptor>, Value) {
    match s.preset {
        Preset::NcTorus => (CalculusDescriptor::nc_torus(), Value::Null),
        Preset::CommutativeTorus => (CalculusDescriptor::commutative_torus(), Value::Null),
        Preset::Qhm => {
            let candidates: Vec<i64> = match s.d_e3_sign {
                Some(sign) => vec![sign],
                None => vec![1, -1],
            };
            let tol = Tolerance::new(s.effective_multiplier());
            let tried: Vec<(i64, bool)> = candidates
                .iter()
                .map(|&sign| {
                    let desc = CalculusDescriptor::qhm(sign);
                    (sign, torsion_free(&base_connection::<C>(&desc, &s.base), &tol))
                })
                .collect();
            let chosen = tried
                .iter()
                .find(|(_, ok)| *ok)
                .map_or(candidates[0], |(sign, _)| *sign);
            let record = json!({
                "chosen": chosen,
                "candidates": tried
                    .iter()
                    .map(|(sign, ok)| json!({ "d_e3_sign": sign, "base_torsion_free": ok }))
                    .collect::<Vec<_>>(),
            });
            (CalculusDescriptor::qhm(chosen), record)
        }
    }
}

fn metric<C: ScenarioField>(input: &MetricInput) -> Result<MetricSpec<C>, ScenarioError> {
    match input {
        MetricInput::Diagonal => Ok(MetricSpec::Diagonal),
        MetricInput::Conformal { k, k_inv } => {
            let k: AlgebraElement<C> = element(k);
            let pair = match k_inv {
                InverseSpec::Explicit(v) => InvertiblePair::new(k, element(v)),
                InverseSpec::Monomial => {
                    InvertiblePair::monomial_inverse(&k).map_err(ctx_algebra("metric.k_inv: monomial inverse"))?
                }
                InverseSpec::Neumann { order, tolerance } => {
                    C::neumann(&k, *order, *tolerance).map_err(ctx_algebra("metric.k_inv: Neumann inverse"))?
                }
            };
            Ok(MetricSpec::Conformal(pair))
        }
    }
}

fn max_degree<C: Coefficient>(elems: &[&AlgebraElement<C>]) -> i64 {
    elems
        .iter()
        .flat_map(|a| a.terms().map(|(k, _)| k.m.abs() + k.n.abs()))
        .max()
        .unwrap_or(0)
}

struct Run<C: Coefficient> {
    theta: Theta,
    tol: Tolerance,
    failures: Vec<String>,
    _marker: std::marker::PhantomData<C>,
}

impl<C: ScenarioField> Run<C> {
    fn accepts(&self, norm: &C::Magnitude) -> bool {
        self.tol.accepts(C::EXACT, norm)
    }

    fn close(&self, a: &AlgebraElement<C>, b: &AlgebraElement<C>) -> bool {
        self.accepts(&(a - b).l1_norm())
    }
}

fn run<C: ScenarioField>(s: &Scenario) -> Result<Report, ScenarioError> {
    let (desc, sign_record) = calculus::<C>(s);
    let n = desc.rank;
    let base = base_connection::<C>(&desc, &s.base);
    let g = metric::<C>(&s.metric)?;
    let g0 = MetricSpec::<C>::Diagonal;

    let mut tol = Tolerance::for_problem(s.effective_multiplier(), g.factor(), &base);
    // derivatives pull down exponents, at most twice
    let (k, k_inv) = (g.k(), g.k_inv());
    let deg = (1 + max_degree(&[&k, &k_inv])) as f64;
    tol.scale *= deg * deg;

    let mut r = Run::<C> {
        theta: s.theta.clone(),
        tol,
        failures: Vec::new(),
        _marker: Default::default(),
    };

    // Levi-Civita connection of g₀: the base itself when it already is one,
    // otherwise ∇₀ + L with L read off Π_{g₀}(∇₀).
    let one = AlgebraElement::<C>::one();
    let base_is_lc = torsion_free(&base, &r.tol)
        && (0..n).all(|i| (0..n).all(|j| r.accepts(&base.compat_residual(&g0, i, j, &one).l1_norm())));
    let (lc0, t_tensor) = if base_is_lc {
        (base.clone(), None)
    } else {
        let t = tt_from_nabla0(&base, &g0).map_err(|source| ScenarioError::Connection {
            context: "reading T off the base connection".into(),
            source,
        })?;
        (qhm_lc_connection(&base, &t), Some(t))
    };
    let mut lc = match g.factor() {
        None => lc0.clone(),
        Some(pair) => conformal_lc_connection_unchecked(&lc0, pair),
    };
    for p in &s.perturb {
        lc = lc.perturbed(p.i, p.j, p.k, &element(&p.delta));
    }

    let probes: Vec<Probe<C>> = match &s.probes {
        None => default_probes(&desc),
        Some(list) => list
            .iter()
            .map(|p| {
                let a: AlgebraElement<C> = element(&p.a);
                let label = format!("e{}⊗e{}·{}", p.i + 1, p.j + 1, pretty(&a, &s.theta));
                Probe {
                    i: p.i,
                    j: p.j,
                    a,
                    label,
                }
            })
            .collect(),
    };
    let residuals = residual_report(&lc, &g, &probes, Some(&base), &r.tol);
    r.failures.extend(
        residuals
            .failures()
            .iter()
            .map(|e| format!("{} = {:e}", e.label, e.norm)),
    );

    // definitional path
    let rc = curvature_operator(&lc);
    let ric = ricci(&rc);
    let scal = scalar_curvature(&g, &ric);
    let antisym_norm =
        rc.r.iter()
            .fold(C::Magnitude::zero(), |acc, t| acc + (t + &t.sigma23()).l1_norm());
    let antisym_ok = r.accepts(&antisym_norm);
    if !antisym_ok {
        r.failures.push(format!(
            "curvature not antisymmetric in its last two legs ({:e})",
            antisym_norm.to_f64()
        ));
    }
    let definitional = json!({
        "ricci": matrix_json(&ric),
        "scalar": scal.to_json(),
        "antisymmetric": antisym_ok,
    });

    let unperturbed = s.perturb.is_empty();
    let closed_form = if !s.outputs.closed_form {
        json!({ "status": "not requested" })
    } else if !desc.basis_closed() {
        json!({ "status": "not applicable", "reason": "d(e_i) ≠ 0 for some basis element" })
    } else {
        let cf = closed_form_curvature(&lc).map_err(|source| ScenarioError::Connection {
            context: "closed-form curvature".into(),
            source,
        })?;
        let cf_ric = ricci(&cf);
        let cf_scal = scalar_curvature(&g, &cf_ric);
        let dist = rc.l1_distance(&cf);
        let agrees = r.accepts(&dist);
        if !agrees {
            r.failures.push(format!(
                "closed-form curvature differs from the definitional one by {:e}",
                dist.to_f64()
            ));
        }
        let mut out = json!({
            "status": "computed",
            "ricci": matrix_json(&cf_ric),
            "scalar": cf_scal.to_json(),
            "curvature_difference": dist.to_f64(),
            "agrees": agrees,
        });
        if let (Some(pair), true) = (g.factor(), unperturbed) {
            let formula =
                crate::connection::christoffel_closed_form(&lc0, pair).map_err(|source| ScenarioError::Connection {
                    context: "closed-form Christoffel symbols".into(),
                    source,
                })?;
            let d = lc.difference(&formula).l1_norm();
            let ok = r.accepts(&d);
            if !ok {
                r.failures.push(format!(
                    "Christoffel symbols differ from the closed form by {:e}",
                    d.to_f64()
                ));
            }
            out["christoffel_difference"] = json!(d.to_f64());
            out["christoffel_agrees"] = json!(ok);
        }
        out
    };

    let reference_applies = s.preset.is_torus() && base.gamma.is_zero() && unperturbed;
    let reference_data = reference_applies.then(|| {
        let pair = g.factor().cloned().unwrap_or_else(InvertiblePair::identity);
        torus_conformal_reference(&desc, &pair)
    });
    let reference = match (&reference_data, s.outputs.reference) {
        (_, false) => json!({ "status": "not requested" }),
        (None, true) => json!({
            "status": "not applicable",
            "reason": "the explicit formulas cover k·g₀ on the torus over the flat connection",
        }),
        (Some(refr), true) => {
            let d_ric = ric.l1_distance(&refr.ricci);
            let d_scal = (&scal - &refr.scalar).l1_norm();
            let agrees = r.accepts(&d_ric) && r.accepts(&d_scal);
            if !agrees {
                r.failures.push(format!(
                    "reference formulas differ: Ricci by {:e}, scalar by {:e}",
                    d_ric.to_f64(),
                    d_scal.to_f64()
                ));
            }
            json!({
                "status": "computed",
                "ricci": matrix_json(&refr.ricci),
                "scalar": refr.scalar.to_json(),
                "ricci_difference": d_ric.to_f64(),
                "scalar_difference": d_scal.to_f64(),
                "agrees": agrees,
            })
        }
    };

    let mut crosschecks = Vec::new();
    if let Some(refr) = &reference_data {
        let mut check = |claim: &str, paper: &AlgebraElement<C>, computed: &AlgebraElement<C>| {
            crosschecks.push(Crosscheck {
                claim: claim.to_string(),
                paper_value: pretty(paper, &r.theta),
                computed: pretty(computed, &r.theta),
                structural_zero: false,
                matches: r.close(paper, computed),
            });
        };
        check(
            "Ric(e1,e1) as displayed in the conformal torus theorem",
            refr.unhalved_ricci.get(0, 0),
            ric.get(0, 0),
        );
        check(
            "Ric(e2,e2) as displayed in the conformal torus theorem",
            refr.unhalved_ricci.get(1, 1),
            ric.get(1, 1),
        );
        check(
            "Ric(e1,e2) as displayed in the conformal torus theorem",
            refr.unhalved_ricci.get(0, 1),
            ric.get(0, 1),
        );
        check(
            "Ric(e2,e1) as displayed in the conformal torus theorem",
            refr.unhalved_ricci.get(1, 0),
            ric.get(1, 0),
        );
        check(
            "Scal from the last line of the conformal torus proof",
            &refr.unhalved_scalar,
            &scal,
        );
        check(
            "Scal as displayed in the conformal torus theorem (bracket as printed)",
            &refr.bracketed_scalar,
            &scal,
        );
    }
    let qhm_theorem_applies =
        s.preset == Preset::Qhm && s.base == BaseInput::QhmNabla0 && s.metric == MetricInput::Diagonal && unperturbed;
    if qhm_theorem_applies {
        qhm_crosschecks(&r, &base, &lc, t_tensor.as_ref(), &ric, &scal, &mut crosschecks);
    }

    let christoffel: Vec<Value> = (0..n)
        .map(|i| {
            Value::Array(
                (0..n)
                    .map(|j| Value::Array((0..n).map(|k| lc.christoffel(i, j, k).to_json()).collect()))
                    .collect(),
            )
        })
        .collect();

    let mut connection = Map::new();
    connection.insert("base_is_levi_civita_for_g0".into(), json!(base_is_lc));
    if let Some(t) = &t_tensor {
        connection.insert("structure_constants".into(), t_json(t));
    }
    if !sign_record.is_null() {
        connection.insert("d_e3_sign".into(), sign_record);
    }
    if let Some(pair) = g.factor() {
        let mut inv = Map::new();
        inv.insert("k_inv".into(), pair.k_inv.to_json());
        inv.insert("residual_bound".into(), json!(pair.residual_bound.to_f64()));
        if let Some(t) = &pair.tail_bound {
            inv.insert("tail_bound".into(), json!(t.to_f64()));
        }
        connection.insert("inverse".into(), Value::Object(inv));
    }

    let pass = r.failures.is_empty();
    let json = json!({
        "scenario": s.to_json(),
        "construction": Value::Object(connection),
        "christoffel": christoffel,
        "ricci": matrix_json(&ric),
        "scalar": scal.to_json(),
        "residuals": residuals_json::<C>(&residuals, &r.tol),
        "paths": {
            "definitional": definitional,
            "closed_form": closed_form,
            "reference": reference,
        },
        "paper_crosschecks": crosschecks.iter().map(Crosscheck::to_json).collect::<Vec<_>>(),
        "verdict": { "pass": pass, "failures": r.failures },
    });
    let table = render_table(s, &lc, &ric, &scal, &residuals, &r, &crosschecks);
    Ok(Report {
        json,
        pass,
        failures: r.failures,
        table,
    })
}

struct Crosscheck {
    claim: String,
    paper_value: String,
    computed: String,
    structural_zero: bool,
    matches: bool,
}

impl Crosscheck {
    fn to_json(&self) -> Value {
        json!({
            "claim": self.claim,
            "paper_value": self.paper_value,
            "computed": self.computed,
            "structural_zero": self.structural_zero,
            "match": self.matches,
        })
    }
}

fn idx3(i: usize, j: usize, k: usize) -> String {
    format!("{}{}{}", i + 1, j + 1, k + 1)
}

/// Printed values for the Heisenberg example; indices are 1-based as printed.
/// `((upper, lower, lower), numerator/denominator)`, 1-based.
type Printed3 = ((usize, usize, usize), (i64, i64));

const PRINTED_T: &[Printed3] = &[((2, 1, 3), (1, 1)), ((2, 3, 1), (1, 1))];
const PRINTED_L: &[Printed3] = &[
    ((1, 2, 3), (1, 2)),
    ((1, 3, 2), (1, 2)),
    ((2, 1, 3), (-1, 2)),
    ((2, 3, 1), (-1, 2)),
    ((3, 1, 2), (1, 2)),
    ((3, 2, 1), (1, 2)),
];
const PRINTED_GAMMA: &[Printed3] = &[
    ((1, 1, 2), (1, 1)),
    ((1, 2, 3), (1, 2)),
    ((1, 3, 2), (1, 2)),
    ((2, 1, 2), (1, 1)),
    ((2, 1, 3), (-1, 2)),
    ((2, 3, 1), (-1, 2)),
    ((3, 1, 2), (3, 2)),
    ((3, 2, 1), (1, 2)),
];
#[allow(clippy::type_complexity)]
const PRINTED_RIC: &[((usize, usize), (i64, i64))] = &[
    ((1, 1), (-1, 1)),
    ((2, 2), (1, 1)),
    ((1, 3), (-1, 2)),
    ((3, 3), (-1, 2)),
    ((2, 3), (-1, 2)),
    ((1, 2), (0, 1)),
    ((2, 1), (0, 1)),
    ((3, 1), (0, 1)),
    ((3, 2), (0, 1)),
];
const PRINTED_SCAL: (i64, i64) = (-1, 2);

fn rat_string(p: i64, q: i64) -> String {
    Rational::new(p, q).to_string()
}

fn qhm_crosschecks<C: ScenarioField>(
    r: &Run<C>,
    base: &Connection<C>,
    lc: &Connection<C>,
    t: Option<&TTensor<C>>,
    ric: &Matrix<C>,
    scal: &AlgebraElement<C>,
    out: &mut Vec<Crosscheck>,
) {
    let value = |p: i64, q: i64| AlgebraElement::<C>::scalar(C::from_rational(&Rational::new(p, q)));
    let mut table_check =
        |name: &str, printed: &[Printed3], get: &dyn Fn(usize, usize, usize) -> AlgebraElement<C>, n: usize| {
            for &((a, b, c), (p, q)) in printed {
                let computed = get(a - 1, b - 1, c - 1);
                out.push(Crosscheck {
                    claim: format!("{name}^{a}_{b}{c} = {}", rat_string(p, q)),
                    paper_value: rat_string(p, q),
                    computed: pretty(&computed, &r.theta),
                    structural_zero: false,
                    matches: r.close(&computed, &value(p, q)),
                });
            }
            let mut stray = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let listed = printed.iter().any(|&((a, b, c), _)| (a - 1, b - 1, c - 1) == (i, j, k));
                        if !listed && !r.accepts(&get(i, j, k).l1_norm()) {
                            stray.push(format!("{name}^{}", idx3(i, j, k)));
                        }
                    }
                }
            }
            out.push(Crosscheck {
                claim: format!("every {name} entry not listed vanishes"),
                paper_value: "0".into(),
                computed: if stray.is_empty() {
                    "0".into()
                } else {
                    format!("nonzero: {}", stray.join(", "))
                },
                structural_zero: true,
                matches: stray.is_empty(),
            });
        };
    let n = lc.rank();
    if let Some(t) = t {
        table_check(
            "T",
            PRINTED_T,
            &|m, i, j| AlgebraElement::scalar(t.get(m, i, j).clone()),
            n,
        );
    }
    let l = lc.difference(base);
    table_check("L", PRINTED_L, &|j, i, m| l.get(j, i, m).clone(), n);
    table_check("Γ", PRINTED_GAMMA, &|i, j, k| lc.christoffel(i, j, k).clone(), n);

    for &((j, l), (p, q)) in PRINTED_RIC {
        let computed = ric.get(j - 1, l - 1);
        out.push(Crosscheck {
            claim: format!("Ric(e{j},e{l}) = {}", rat_string(p, q)),
            paper_value: rat_string(p, q),
            computed: pretty(computed, &r.theta),
            structural_zero: p == 0,
            matches: r.close(computed, &value(p, q)),
        });
    }
    let (p, q) = PRINTED_SCAL;
    out.push(Crosscheck {
        claim: format!("Scal = {}", rat_string(p, q)),
        paper_value: rat_string(p, q),
        computed: pretty(scal, &r.theta),
        structural_zero: false,
        matches: r.close(scal, &value(p, q)),
    });
}

fn matrix_json<C: Coefficient>(m: &Matrix<C>) -> Value {
    Value::Array(
        (0..m.n)
            .map(|j| Value::Array((0..m.n).map(|l| m.get(j, l).to_json()).collect()))
            .collect(),
    )
}

fn t_json<C: Coefficient>(t: &TTensor<C>) -> Value {
    let n = t.rank;
    let mut out = Map::new();
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v = t.get(m, i, j);
                if !v.is_zero() {
                    out.insert(format!("T^{}_{}{}", m + 1, i + 1, j + 1), v.to_json(0));
                }
            }
        }
    }
    Value::Object(out)
}

fn residuals_json<C: Coefficient>(rep: &ResidualReport, tol: &Tolerance) -> Value {
    let entries = rep
        .entries()
        .map(|e| json!({ "label": e.label, "norm": e.norm, "pass": e.pass }))
        .collect::<Vec<_>>();
    let tolerance = if C::EXACT {
        json!({ "mode": "exact", "rule": "residuals must vanish identically" })
    } else {
        json!({
            "mode": "numeric",
            "multiplier": tol.multiplier,
            "scale": tol.scale,
            "inherited": tol.inherited,
            "threshold": tol.threshold(),
        })
    };
    json!({ "tolerance": tolerance, "all_pass": rep.all_pass(), "entries": entries })
}

fn monomial_string(m: i64, n: i64) -> String {
    let factor = |name: &str, e: i64| match e {
        0 => None,
        1 => Some(name.to_string()),
        e => Some(format!("{name}^{e}")),
    };
    [factor("U", m), factor("V", n)]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("·")
}

fn coeff_string<C: Coefficient>(c: &C, bare: bool) -> String {
    let s = c.to_string();
    let compound = s.trim_start_matches('-').contains(['+', '-']) || s.starts_with('(');
    if bare || !compound {
        s
    } else {
        format!("({s})")
    }
}

/// Human-readable element: `φ^s` is folded into the coefficient when θ
/// makes it a power of `i`, and left symbolic otherwise.
pub fn pretty<C: Coefficient>(a: &AlgebraElement<C>, theta: &Theta) -> String {
    let mut evaluated: BTreeMap<(i64, i64), C> = BTreeMap::new();
    let mut formal: Vec<(i64, i64, i64, C)> = Vec::new();
    for (k, c) in a.terms() {
        match theta.quarter_turns(k.s) {
            Some(q) => {
                let mut v = c.clone();
                for _ in 0..q {
                    v = v * C::imaginary_unit();
                }
                let slot = evaluated.entry((k.m, k.n)).or_insert_with(C::zero);
                *slot = slot.clone() + v;
            }
            None => formal.push((k.m, k.n, k.s, c.clone())),
        }
    }
    let mut parts = Vec::new();
    for ((m, n), c) in evaluated {
        if c.is_zero() {
            continue;
        }
        let mono = monomial_string(m, n);
        parts.push(match (mono.is_empty(), c.is_one()) {
            (true, _) => coeff_string(&c, true),
            (false, true) => mono,
            (false, false) if (-c.clone()).is_one() => format!("-{mono}"),
            (false, false) => format!("{}·{mono}", coeff_string(&c, false)),
        });
    }
    for (m, n, s, c) in formal {
        let mono = monomial_string(m, n);
        let mut term = format!("{}·φ^{s}", coeff_string(&c, false));
        if !mono.is_empty() {
            term.push('·');
            term.push_str(&mono);
        }
        parts.push(term);
    }
    if parts.is_empty() {
        return "0".into();
    }
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        match p.strip_prefix('-') {
            Some(rest) => {
                out.push_str(" - ");
                out.push_str(rest);
            }
            None => {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
    }
    out
}

fn render_table<C: ScenarioField>(
    s: &Scenario,
    lc: &Connection<C>,
    ric: &Matrix<C>,
    scal: &AlgebraElement<C>,
    residuals: &ResidualReport,
    r: &Run<C>,
    crosschecks: &[Crosscheck],
) -> String {
    let n = lc.rank();
    let mut t = String::new();
    let _ = writeln!(
        t,
        "scenario  {} (preset {}, {} mode, θ = {})",
        s.label,
        s.preset,
        s.mode.name(),
        s.theta
    );
    let _ = writeln!(t, "\nChristoffel symbols Γ^i_jk (nonzero)");
    let mut any = false;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let g = lc.christoffel(i, j, k);
                if !g.is_zero() {
                    any = true;
                    let _ = writeln!(t, "  Γ^{}_{}{} = {}", i + 1, j + 1, k + 1, pretty(g, &r.theta));
                }
            }
        }
    }
    if !any {
        let _ = writeln!(t, "  (all zero)");
    }
    let _ = writeln!(t, "\nRicci tensor");
    for j in 0..n {
        for l in 0..n {
            let _ = writeln!(t, "  Ric(e{},e{}) = {}", j + 1, l + 1, pretty(ric.get(j, l), &r.theta));
        }
    }
    let _ = writeln!(t, "\nScal = {}", pretty(scal, &r.theta));
    let total = residuals.entries().count();
    let failed = residuals.failures().len();
    let _ = writeln!(t, "\nresiduals  {} checked, {} failed", total, failed);
    if C::EXACT {
        let _ = writeln!(t, "  tolerance: exact zero");
    } else {
        let _ = writeln!(t, "  tolerance: {:e}", r.tol.threshold());
    }
    if r.failures.is_empty() {
        let _ = writeln!(t, "verdict  PASS");
    } else {
        let _ = writeln!(t, "verdict  FAIL");
        for f in &r.failures {
            let _ = writeln!(t, "  {f}");
        }
    }
    if !crosschecks.is_empty() {
        let _ = writeln!(t, "\npaper cross-checks (informational)");
        for c in crosschecks {
            let mark = if c.matches { "match " } else { "DIFFER" };
            let _ = writeln!(
                t,
                "  [{mark}] {}  (paper {}, computed {})",
                c.claim, c.paper_value, c.computed
            );
        }
    }
    t
}
