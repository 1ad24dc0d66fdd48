//! Coefficient arithmetic.
//!
//! Exact mode works over Gaussian rationals with the deformation phase
//! `φ = e^{2πiθ}` kept formal: a [`PhasedScalar`] is `c·φ^s` and only the
//! exponent `s` is tracked. Numeric mode uses [`ComplexFloat`]. Both
//! coefficient fields implement [`Coefficient`], which is what the algebra
//! and everything above it is generic over.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ScalarError;

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self, ScalarError> {
        if denom.is_zero() {
            return Err(ScalarError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn half() -> Self {
        Rational::new(1, 2)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Integer value when the rational is integral and fits in `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational(BigRational::one())
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

macro_rules! forward_rational_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_rational_binop!(Add, add);
forward_rational_binop!(Sub, sub);
forward_rational_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ScalarError::Parse(s.to_string());
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        Rational::from_big(num, den)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `re + i·im` with rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational {
            re,
            im: Rational::zero(),
        }
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), -self.im.clone())
    }

    /// `|re| + |im|`, an exact upper bound on the modulus.
    pub fn l1_magnitude(&self) -> Rational {
        &self.re.abs() + &self.im.abs()
    }

    pub fn recip(&self) -> Option<Self> {
        let norm = &(&self.re * &self.re) + &(&self.im * &self.im);
        let inv = norm.recip()?;
        Some(GaussianRational::new(&self.re * &inv, -(&self.im * &inv)))
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Multiplication by `i^q`.
    pub fn mul_i_pow(&self, q: i64) -> Self {
        match q.rem_euclid(4) {
            0 => self.clone(),
            1 => GaussianRational::new(-self.im.clone(), self.re.clone()),
            2 => GaussianRational::new(-self.re.clone(), -self.im.clone()),
            _ => GaussianRational::new(self.im.clone(), -self.re.clone()),
        }
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        GaussianRational::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        GaussianRational::real(Rational::one())
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        GaussianRational::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        GaussianRational::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &'a GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianRational::new(-self.re, -self.im)
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write_imag(f, &self.im, false),
            (false, false) => {
                write!(f, "{}", self.re)?;
                write_imag(f, &self.im, true)
            }
        }
    }
}

fn write_imag(f: &mut fmt::Formatter<'_>, im: &Rational, signed: bool) -> fmt::Result {
    let negative = im.numer().is_negative();
    let mag = im.abs();
    let sign = match (negative, signed) {
        (true, _) => "-",
        (false, true) => "+",
        (false, false) => "",
    };
    if mag.is_one() {
        write!(f, "{sign}i")
    } else {
        write!(f, "{sign}{mag}i")
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Value of the deformation parameter θ.
#[derive(Clone, Debug, PartialEq)]
pub enum Theta {
    Exact(Rational),
    Float(f64),
}

impl Theta {
    pub fn to_f64(&self) -> f64 {
        match self {
            Theta::Exact(r) => r.to_f64(),
            Theta::Float(x) => *x,
        }
    }

    /// `φ^s` as a power of `i` when `4·θ·s` is an integer.
    pub fn quarter_turns(&self, phase_exp: i64) -> Option<i64> {
        if phase_exp == 0 {
            return Some(0);
        }
        match self {
            Theta::Exact(theta) => (&(theta * &Rational::from_integer(4)) * &Rational::from_integer(phase_exp))
                .to_i64()
                .map(|q| q.rem_euclid(4)),
            Theta::Float(_) => None,
        }
    }

    /// `φ^s` in floating point.
    pub fn phase(&self, phase_exp: i64) -> Complex64 {
        if let Some(q) = self.quarter_turns(phase_exp) {
            return GaussianRational::one().mul_i_pow(q).to_complex();
        }
        let angle = 2.0 * std::f64::consts::PI * self.to_f64() * phase_exp as f64;
        Complex64::from_polar(1.0, angle)
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Exact(r) => write!(f, "{r}"),
            Theta::Float(x) => write!(f, "{x}"),
        }
    }
}

/// `coeff · φ^phase_exp` with φ formal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PhasedScalar {
    pub coeff: GaussianRational,
    pub phase_exp: i64,
}

/// Result of evaluating a formal phase at a concrete θ.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseValue {
    Exact(GaussianRational),
    Float(ComplexFloat),
}

impl PhasedScalar {
    pub fn new(coeff: GaussianRational, phase_exp: i64) -> Self {
        let phase_exp = if coeff.is_zero() { 0 } else { phase_exp };
        PhasedScalar { coeff, phase_exp }
    }

    pub fn phased_mul(&self, other: &PhasedScalar) -> PhasedScalar {
        PhasedScalar::new(&self.coeff * &other.coeff, self.phase_exp + other.phase_exp)
    }

    /// Complex conjugate; `|φ| = 1` so the phase exponent flips sign.
    pub fn conj(&self) -> PhasedScalar {
        PhasedScalar::new(self.coeff.conj(), -self.phase_exp)
    }

    pub fn l1_magnitude(&self) -> Rational {
        self.coeff.l1_magnitude()
    }

    /// `coeff · e^{2πiθs}`, exact whenever `φ^s ∈ {±1, ±i}`.
    pub fn evaluate_phase(&self, theta: &Theta) -> PhaseValue {
        match theta.quarter_turns(self.phase_exp) {
            Some(q) => PhaseValue::Exact(self.coeff.mul_i_pow(q)),
            None => PhaseValue::Float(ComplexFloat(self.coeff.to_complex() * theta.phase(self.phase_exp))),
        }
    }

    pub fn evaluate_phase_exact(&self, theta: &Theta) -> Result<GaussianRational, ScalarError> {
        match self.evaluate_phase(theta) {
            PhaseValue::Exact(z) => Ok(z),
            PhaseValue::Float(_) => Err(ScalarError::ExactnessUnavailable {
                theta: theta.to_string(),
                phase_exp: self.phase_exp,
            }),
        }
    }
}

/// Double-precision complex coefficient for numeric mode.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct ComplexFloat(pub Complex64);

impl ComplexFloat {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexFloat(Complex64::new(re, im))
    }

    pub fn is_finite(&self) -> bool {
        self.0.re.is_finite() && self.0.im.is_finite()
    }
}

impl fmt::Debug for ComplexFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ComplexFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Zero for ComplexFloat {
    fn zero() -> Self {
        ComplexFloat::default()
    }
    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
}

impl One for ComplexFloat {
    fn one() -> Self {
        ComplexFloat::new(1.0, 0.0)
    }
}

impl Add for ComplexFloat {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ComplexFloat(self.0 + rhs.0)
    }
}

impl Sub for ComplexFloat {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ComplexFloat(self.0 - rhs.0)
    }
}

impl Mul for ComplexFloat {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ComplexFloat(self.0 * rhs.0)
    }
}

impl Neg for ComplexFloat {
    type Output = Self;
    fn neg(self) -> Self {
        ComplexFloat(-self.0)
    }
}

/// Size measure attached to a coefficient field: exact rationals for exact
/// mode, `f64` for numeric mode.
pub trait Magnitude:
    Clone + fmt::Debug + PartialOrd + Zero + One + Add<Output = Self> + Mul<Output = Self> + Send + Sync
{
    fn to_f64(&self) -> f64;
}

impl Magnitude for Rational {
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
}

impl Magnitude for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Field of coefficients for the algebra. The formal phase is handled one
/// level up, so implementors only need plain complex-field arithmetic.
pub trait Coefficient:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    type Magnitude: Magnitude;

    /// `true` for exact arithmetic; residuals must then vanish identically.
    const EXACT: bool;

    fn imaginary_unit() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn conj(&self) -> Self;
    fn recip(&self) -> Option<Self>;
    /// Modulus bound; `|re| + |im|` in exact mode, the true modulus in
    /// numeric mode.
    fn magnitude(&self) -> Self::Magnitude;
    fn to_complex(&self) -> Complex64;

    /// `"exact"` or `"numeric"`, as written in element JSON.
    const MODE: &'static str;

    /// `{"re", "im", "phase_exp"}` JSON for `self · φ^phase_exp`.
    fn to_json(&self, phase_exp: i64) -> serde_json::Value;
    /// Inverse of [`Coefficient::to_json`]; `im` and `phase_exp` default to 0.
    fn from_json(v: &serde_json::Value) -> Result<(Self, i64), String>;

    fn from_integer(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(n))
    }

    fn half() -> Self {
        Self::from_rational(&Rational::half())
    }
}

impl Coefficient for GaussianRational {
    type Magnitude = Rational;
    const EXACT: bool = true;
    const MODE: &'static str = "exact";

    fn to_json(&self, phase_exp: i64) -> serde_json::Value {
        serde_json::json!({
            "re": self.re.to_string(),
            "im": self.im.to_string(),
            "phase_exp": phase_exp,
        })
    }

    fn from_json(v: &serde_json::Value) -> Result<(Self, i64), String> {
        let (re, im, s) = json_parts(v)?;
        let part = |x: Option<&serde_json::Value>, name: &str| -> Result<Rational, String> {
            match x {
                None => Ok(Rational::zero()),
                Some(serde_json::Value::String(t)) => t.parse().map_err(|e: ScalarError| format!("{name}: {e}")),
                Some(serde_json::Value::Number(n)) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap())),
                Some(other) => Err(format!(
                    "{name}: expected an integer or a \"p/q\" string in exact mode, got {other}"
                )),
            }
        };
        Ok((GaussianRational::new(part(re, "re")?, part(im, "im")?), s))
    }

    fn imaginary_unit() -> Self {
        GaussianRational::i()
    }
    fn from_rational(r: &Rational) -> Self {
        GaussianRational::real(r.clone())
    }
    fn conj(&self) -> Self {
        GaussianRational::conj(self)
    }
    fn recip(&self) -> Option<Self> {
        GaussianRational::recip(self)
    }
    fn magnitude(&self) -> Rational {
        self.l1_magnitude()
    }
    fn to_complex(&self) -> Complex64 {
        GaussianRational::to_complex(self)
    }
}

impl Coefficient for ComplexFloat {
    type Magnitude = f64;
    const EXACT: bool = false;
    const MODE: &'static str = "numeric";

    fn to_json(&self, phase_exp: i64) -> serde_json::Value {
        serde_json::json!({ "re": self.0.re, "im": self.0.im, "phase_exp": phase_exp })
    }

    fn from_json(v: &serde_json::Value) -> Result<(Self, i64), String> {
        let (re, im, s) = json_parts(v)?;
        let part = |x: Option<&serde_json::Value>, name: &str| -> Result<f64, String> {
            let value = match x {
                None => 0.0,
                Some(serde_json::Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
                Some(serde_json::Value::String(t)) => {
                    t.parse::<Rational>().map_err(|e| format!("{name}: {e}"))?.to_f64()
                }
                Some(other) => return Err(format!("{name}: expected a number, got {other}")),
            };
            if value.is_finite() {
                Ok(value)
            } else {
                Err(format!("{name}: not finite"))
            }
        };
        Ok((ComplexFloat::new(part(re, "re")?, part(im, "im")?), s))
    }

    fn imaginary_unit() -> Self {
        ComplexFloat::new(0.0, 1.0)
    }
    fn from_rational(r: &Rational) -> Self {
        ComplexFloat::new(r.to_f64(), 0.0)
    }
    fn conj(&self) -> Self {
        ComplexFloat(self.0.conj())
    }
    fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(ComplexFloat(self.0.inv()))
        }
    }
    fn magnitude(&self) -> f64 {
        self.0.norm()
    }
    fn to_complex(&self) -> Complex64 {
        self.0
    }
}

type JsonParts<'a> = (Option<&'a serde_json::Value>, Option<&'a serde_json::Value>, i64);

fn json_parts(v: &serde_json::Value) -> Result<JsonParts<'_>, String> {
    let obj = match v {
        serde_json::Value::Object(obj) => obj,
        // bare scalars are accepted as real coefficients
        serde_json::Value::Number(_) | serde_json::Value::String(_) => return Ok((Some(v), None, 0)),
        other => return Err(format!("expected a coefficient object, got {other}")),
    };
    if let Some(key) = obj.keys().find(|k| !matches!(k.as_str(), "re" | "im" | "phase_exp")) {
        return Err(format!("unexpected key {key:?}"));
    }
    let phase = match obj.get("phase_exp") {
        None => 0,
        Some(p) => p
            .as_i64()
            .ok_or_else(|| format!("phase_exp: expected an integer, got {p}"))?,
    };
    Ok((obj.get("re"), obj.get("im"), phase))
}
