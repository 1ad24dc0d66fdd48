//! Twisted Laurent polynomials in two unitaries `U`, `V`.
//!
//! Elements are stored in the normal form `Σ c · φ^s · U^m V^n` with the
//! phase `φ = e^{2πiθ}` kept formal. The single commutation convention used
//! everywhere is
//!
//! ```text
//! (U^m V^n)(U^m' V^n') = φ^{-n·m'} U^{m+m'} V^{n+n'}
//! ```
//!
//! i.e. `V U = φ⁻¹ U V`, equivalently `U V = φ V U`.
//!
//! Because φ never gets a numeric value during computation, every ring
//! identity that holds here holds for all θ at once.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::AlgebraError;
use crate::scalars::{Coefficient, ComplexFloat, GaussianRational, Theta};

/// Support key of one term: `φ^s U^m V^n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Key {
    pub m: i64,
    pub n: i64,
    pub s: i64,
}

impl Key {
    pub const UNIT: Key = Key { m: 0, n: 0, s: 0 };

    pub fn new(m: i64, n: i64, s: i64) -> Self {
        Key { m, n, s }
    }

    fn times(self, other: Key) -> Key {
        Key {
            m: self.m + other.m,
            n: self.n + other.n,
            s: self.s + other.s - self.n * other.m,
        }
    }
}

/// Finitely supported element of the twisted Laurent ring. No zero
/// coefficients are ever stored.
#[derive(Clone, PartialEq)]
pub struct AlgebraElement<C> {
    terms: BTreeMap<Key, C>,
}

pub type ExactElement = AlgebraElement<GaussianRational>;
pub type NumericElement = AlgebraElement<ComplexFloat>;

impl<C: Coefficient> AlgebraElement<C> {
    pub fn zero() -> Self {
        AlgebraElement { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::scalar(C::one())
    }

    pub fn scalar(c: C) -> Self {
        Self::term(c, 0, 0, 0)
    }

    pub fn monomial(c: C, m: i64, n: i64) -> Self {
        Self::term(c, m, n, 0)
    }

    /// `c · φ^s · U^m V^n`.
    pub fn term(c: C, m: i64, n: i64, s: i64) -> Self {
        let mut out = Self::zero();
        out.accumulate(Key::new(m, n, s), c);
        out
    }

    pub fn u() -> Self {
        Self::monomial(C::one(), 1, 0)
    }

    pub fn v() -> Self {
        Self::monomial(C::one(), 0, 1)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Key, C)>) -> Self {
        let mut out = Self::zero();
        for (k, c) in terms {
            out.accumulate(k, c);
        }
        out
    }

    fn accumulate(&mut self, key: Key, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, c);
            }
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &C)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, key: Key) -> C {
        self.terms.get(&key).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient if the element is `c · 1` (phase exponent zero).
    pub fn as_scalar(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => self.terms.get(&Key::UNIT).cloned(),
            _ => None,
        }
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                out.accumulate(ka.times(*kb), ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Multiplication by a central scalar.
    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, x)| (*k, x.clone() * c.clone())))
    }

    /// Antilinear anti-involution with `U* = U⁻¹`, `V* = V⁻¹`, `φ* = φ⁻¹`.
    pub fn star(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(k, c)| (Key::new(-k.m, -k.n, -k.s - k.n * k.m), c.conj())),
        )
    }

    /// The trace `τ(Σ a_mn U^m V^n) = a_00`. Its value may still carry
    /// formal phases, so it is returned as an element supported at `U⁰V⁰`.
    pub fn trace(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(k, _)| k.m == 0 && k.n == 0)
                .map(|(k, c)| (*k, c.clone())),
        )
    }

    /// ℓ¹ norm of the coefficients, each formal phase counted with modulus 1.
    pub fn l1_norm(&self) -> C::Magnitude {
        self.terms
            .values()
            .fold(C::Magnitude::zero(), |acc, c| acc + c.magnitude())
    }

    pub fn derive(&self, d: &Derivation) -> Self {
        if d.is_zero() {
            return Self::zero();
        }
        let i = C::imaginary_unit();
        Self::from_terms(self.terms.iter().map(|(k, c)| {
            let w = C::from_integer(d.u_weight * k.m + d.v_weight * k.n);
            (*k, i.clone() * w * c.clone())
        }))
    }

    /// Substitute a value for φ; terms that collapse onto the same `U^m V^n`
    /// are merged.
    pub fn evaluate_phases(&self, theta: &Theta) -> AlgebraElement<ComplexFloat> {
        AlgebraElement::from_terms(
            self.terms
                .iter()
                .map(|(k, c)| (Key::new(k.m, k.n, 0), ComplexFloat(c.to_complex() * theta.phase(k.s)))),
        )
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| serde_json::json!({ "m": k.m, "n": k.n, "coeff": c.to_json(k.s) }))
            .collect();
        serde_json::json!({ "mode": C::MODE, "terms": terms })
    }

    /// Parse element JSON. Errors carry a path relative to the element.
    pub fn from_json(v: &Value) -> Result<Self, (String, String)> {
        let obj = v
            .as_object()
            .ok_or_else(|| (String::new(), format!("expected an element object, got {v}")))?;
        if let Some(mode) = obj.get("mode") {
            if mode.as_str() != Some(C::MODE) {
                return Err((".mode".into(), format!("expected {:?}, got {mode}", C::MODE)));
            }
        }
        let terms = obj
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| (".terms".to_string(), "missing or not an array".to_string()))?;
        let mut out = Self::zero();
        for (idx, t) in terms.iter().enumerate() {
            let at = |field: &str| format!(".terms[{idx}]{field}");
            let int = |field: &str| -> Result<i64, (String, String)> {
                t.get(field)
                    .and_then(Value::as_i64)
                    .ok_or_else(|| (at(&format!(".{field}")), "expected an integer".into()))
            };
            let (m, n) = (int("m")?, int("n")?);
            let coeff = t.get("coeff").ok_or_else(|| (at(".coeff"), "missing".to_string()))?;
            let (c, s) = C::from_json(coeff).map_err(|e| (at(".coeff"), e))?;
            out.accumulate(Key::new(m, n, s), c);
        }
        Ok(out)
    }
}

impl AlgebraElement<GaussianRational> {
    pub fn to_numeric(&self) -> AlgebraElement<ComplexFloat> {
        AlgebraElement::from_terms(self.terms.iter().map(|(k, c)| (*k, ComplexFloat(c.to_complex()))))
    }
}

impl<C: Coefficient> Default for AlgebraElement<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<'a, C: Coefficient> Add<&'a AlgebraElement<C>> for &'a AlgebraElement<C> {
    type Output = AlgebraElement<C>;
    fn add(self, rhs: &'a AlgebraElement<C>) -> AlgebraElement<C> {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.accumulate(*k, c.clone());
        }
        out
    }
}

impl<'a, C: Coefficient> Sub<&'a AlgebraElement<C>> for &'a AlgebraElement<C> {
    type Output = AlgebraElement<C>;
    fn sub(self, rhs: &'a AlgebraElement<C>) -> AlgebraElement<C> {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.accumulate(*k, -c.clone());
        }
        out
    }
}

impl<'a, C: Coefficient> Mul<&'a AlgebraElement<C>> for &'a AlgebraElement<C> {
    type Output = AlgebraElement<C>;
    fn mul(self, rhs: &'a AlgebraElement<C>) -> AlgebraElement<C> {
        self.multiply(rhs)
    }
}

impl<C: Coefficient> Add for AlgebraElement<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl<C: Coefficient> Sub for AlgebraElement<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<C: Coefficient> Mul for AlgebraElement<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.multiply(&rhs)
    }
}

impl<C: Coefficient> Neg for AlgebraElement<C> {
    type Output = Self;
    fn neg(self) -> Self {
        AlgebraElement {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl<C: Coefficient> Neg for &AlgebraElement<C> {
    type Output = AlgebraElement<C>;
    fn neg(self) -> AlgebraElement<C> {
        -self.clone()
    }
}

impl<C: Coefficient> fmt::Display for AlgebraElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            if k.s != 0 {
                write!(f, "·φ^{}", k.s)?;
            }
            if k.m != 0 {
                write!(f, "·U^{}", k.m)?;
            }
            if k.n != 0 {
                write!(f, "·V^{}", k.n)?;
            }
        }
        Ok(())
    }
}

impl<C: Coefficient> fmt::Debug for AlgebraElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<C: Coefficient> Serialize for AlgebraElement<C> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de, C: Coefficient> Deserialize<'de> for AlgebraElement<C> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        Self::from_json(&v).map_err(|(path, msg)| serde::de::Error::custom(format!("{path}: {msg}")))
    }
}

/// `∂(U^m V^n) = i(αm + βn) U^m V^n`; the torus derivations are
/// `∂₁ = (1, 0)` and `∂₂ = (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub u_weight: i64,
    pub v_weight: i64,
}

impl Derivation {
    pub const ZERO: Derivation = Derivation {
        u_weight: 0,
        v_weight: 0,
    };

    pub fn new(u_weight: i64, v_weight: i64) -> Self {
        Derivation { u_weight, v_weight }
    }

    pub fn is_zero(&self) -> bool {
        self.u_weight == 0 && self.v_weight == 0
    }
}

/// Mode-erased element, for code that only learns the mode at runtime.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyElement {
    Exact(ExactElement),
    Numeric(NumericElement),
}

impl AnyElement {
    pub fn multiply(&self, other: &AnyElement) -> Result<AnyElement, AlgebraError> {
        match (self, other) {
            (AnyElement::Exact(a), AnyElement::Exact(b)) => Ok(AnyElement::Exact(a * b)),
            (AnyElement::Numeric(a), AnyElement::Numeric(b)) => Ok(AnyElement::Numeric(a * b)),
            _ => Err(AlgebraError::ModeMismatch),
        }
    }

    pub fn from_json(v: &Value) -> Result<AnyElement, (String, String)> {
        match v.get("mode").and_then(Value::as_str) {
            Some("exact") | None => ExactElement::from_json(v).map(AnyElement::Exact),
            Some("numeric") => NumericElement::from_json(v).map(AnyElement::Numeric),
            Some(other) => Err((".mode".into(), format!("unknown mode {other:?}"))),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyElement::Exact(a) => a.to_json(),
            AnyElement::Numeric(a) => a.to_json(),
        }
    }
}

/// `k` together with an (approximate) inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertiblePair<C: Coefficient> {
    pub k: AlgebraElement<C>,
    pub k_inv: AlgebraElement<C>,
    /// `max(‖k·k_inv − 1‖₁, ‖k_inv·k − 1‖₁)` as actually computed.
    pub residual_bound: C::Magnitude,
    /// A-priori Neumann tail bound, when the inverse came from a series.
    pub tail_bound: Option<C::Magnitude>,
}

impl<C: Coefficient> InvertiblePair<C> {
    /// Pairs `k` with a caller-supplied inverse and measures the residual.
    pub fn new(k: AlgebraElement<C>, k_inv: AlgebraElement<C>) -> Self {
        let residual_bound = inverse_residual(&k, &k_inv);
        InvertiblePair {
            k,
            k_inv,
            residual_bound,
            tail_bound: None,
        }
    }

    pub fn identity() -> Self {
        Self::new(AlgebraElement::one(), AlgebraElement::one())
    }

    /// Exact inverse of a single term `c φ^s U^m V^n`, namely
    /// `c⁻¹ φ^{-s-nm} U^{-m} V^{-n}`.
    pub fn monomial_inverse(a: &AlgebraElement<C>) -> Result<Self, AlgebraError> {
        let not_monomial = AlgebraError::NotAMonomial {
            support: a.support_len(),
        };
        let (k, c) = match a.terms.iter().next() {
            Some((k, c)) if a.support_len() == 1 => (*k, c),
            _ => return Err(not_monomial),
        };
        let c_inv = c.recip().ok_or(not_monomial)?;
        let inv = AlgebraElement::term(c_inv, -k.m, -k.n, -k.s - k.n * k.m);
        Ok(Self::new(a.clone(), inv))
    }
}

impl InvertiblePair<ComplexFloat> {
    /// `k = λ(1 + a)` with λ the constant term; `k⁻¹ ≈ λ⁻¹ Σ_{t≤order} (−a)^t`.
    pub fn neumann_inverse(k: &NumericElement, order: usize, tolerance: f64) -> Result<Self, AlgebraError> {
        let lambda = k.coeff(Key::UNIT);
        let lambda_inv = lambda
            .recip()
            .ok_or(AlgebraError::NotDiagonallyDominant { norm: f64::INFINITY })?;
        let a = &k.scale(&lambda_inv) - &NumericElement::one();
        let norm = a.l1_norm();
        if norm >= 1.0 {
            return Err(AlgebraError::NotDiagonallyDominant { norm });
        }
        // Horner: 1 − a(1 − a(1 − …))
        let minus_a = -&a;
        let one = NumericElement::one();
        let mut sum = NumericElement::one();
        for _ in 0..order {
            sum = &one + &(&minus_a * &sum);
        }
        let k_inv = sum.scale(&lambda_inv);
        let mut pair = Self::new(k.clone(), k_inv);
        pair.tail_bound = Some(norm.powi(order as i32 + 1) / (1.0 - norm));
        if pair.residual_bound > tolerance {
            return Err(AlgebraError::ToleranceNotMet {
                residual: pair.residual_bound,
                tolerance,
                order,
            });
        }
        Ok(pair)
    }
}

fn inverse_residual<C: Coefficient>(k: &AlgebraElement<C>, k_inv: &AlgebraElement<C>) -> C::Magnitude {
    let one = AlgebraElement::<C>::one();
    let left = (&(k * k_inv) - &one).l1_norm();
    let right = (&(k_inv * k) - &one).l1_norm();
    if left >= right {
        left
    } else {
        right
    }
}
