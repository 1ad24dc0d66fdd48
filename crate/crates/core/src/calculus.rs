//! Free one-form modules with a central basis `{e_i}`.
//!
//! Every tensor is stored by its right coefficients: `ω = Σ e_i a_i`,
//! `X = Σ e_i ⊗ e_j X_ij`, and so on. Since the `e_i` commute with the
//! algebra, left multiplication by `a` just multiplies every coefficient on
//! the left; coefficients themselves are never reordered.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_traits::Zero;

use crate::algebra::{AlgebraElement, Derivation};
use crate::error::CalculusError;
use crate::scalars::{Coefficient, Rational};

/// Rank, derivations and the (scalar) exterior derivatives of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CalculusDescriptor {
    pub rank: usize,
    /// `d a = Σ_j e_j ∂_j(a)`.
    pub derivations: Vec<Derivation>,
    /// `d(e_i) = Σ_{j<k} e_j ∧ e_k c^i_{jk}`, keyed by `(j, k)`.
    pub d_of_basis: Vec<BTreeMap<(usize, usize), Rational>>,
    pub label: String,
}

impl CalculusDescriptor {
    /// Noncommutative 2-torus: `∂₁ U = iU`, `∂₂ V = iV`, closed basis.
    pub fn nc_torus() -> Arc<Self> {
        Arc::new(Self::torus("nc-torus"))
    }

    /// Same calculus; only the scenario's θ differs.
    pub fn commutative_torus() -> Arc<Self> {
        Arc::new(Self::torus("commutative-torus"))
    }

    fn torus(label: &str) -> Self {
        CalculusDescriptor {
            rank: 2,
            derivations: vec![Derivation::new(1, 0), Derivation::new(0, 1)],
            d_of_basis: vec![BTreeMap::new(), BTreeMap::new()],
            label: label.to_string(),
        }
    }

    /// Rank-3 quantum Heisenberg calculus at the level of structure
    /// constants: derivations vanish on the coefficients we use and
    /// `d(e₃) = sign · e₁ ∧ e₂`.
    pub fn qhm(sign: i64) -> Arc<Self> {
        let mut d3 = BTreeMap::new();
        d3.insert((0, 1), Rational::from_integer(sign));
        Arc::new(CalculusDescriptor {
            rank: 3,
            derivations: vec![Derivation::ZERO; 3],
            d_of_basis: vec![BTreeMap::new(), BTreeMap::new(), d3],
            label: "qhm".to_string(),
        })
    }

    pub fn basis_closed(&self) -> bool {
        self.d_of_basis.iter().all(|m| m.values().all(Zero::is_zero))
    }

    pub fn exterior_d<C: Coefficient>(self: &Arc<Self>, a: &AlgebraElement<C>) -> OneForm<C> {
        OneForm {
            desc: self.clone(),
            coeffs: self.derivations.iter().map(|d| a.derive(d)).collect(),
        }
    }

    pub fn d_basis<C: Coefficient>(self: &Arc<Self>, i: usize) -> TwoForm<C> {
        let mut w = TwoForm::zero(self);
        for (&(j, k), c) in &self.d_of_basis[i] {
            w.set(j, k, AlgebraElement::scalar(C::from_rational(c)));
        }
        w
    }

    /// `d(Σ e_k a_k) = Σ d(e_k) a_k − Σ e_k ∧ d a_k`.
    pub fn d_one_form<C: Coefficient>(self: &Arc<Self>, w: &OneForm<C>) -> TwoForm<C> {
        self.assert_same(&w.desc);
        let mut out = TwoForm::zero(self);
        for (k, a) in w.coeffs.iter().enumerate() {
            out = &out + &self.d_basis::<C>(k).right_mul(a);
            let da = self.exterior_d(a);
            for (j, b) in da.coeffs.iter().enumerate() {
                out.add_basis(k, j, &-b);
            }
        }
        out
    }

    fn check_same(self: &Arc<Self>, other: &Arc<Self>) -> Result<(), CalculusError> {
        if Arc::ptr_eq(self, other) || **self == **other {
            Ok(())
        } else {
            Err(CalculusError::DescriptorMismatch {
                left: self.label.clone(),
                right: other.label.clone(),
            })
        }
    }

    fn assert_same(self: &Arc<Self>, other: &Arc<Self>) {
        if let Err(e) = self.check_same(other) {
            panic!("{e}");
        }
    }
}

/// Shared plumbing for the dense tensor types.
macro_rules! dense_tensor {
    ($name:ident, $order:expr) => {
        #[derive(Clone, PartialEq)]
        pub struct $name<C> {
            pub desc: Arc<CalculusDescriptor>,
            pub coeffs: Vec<AlgebraElement<C>>,
        }

        impl<C: Coefficient> $name<C> {
            pub fn zero(desc: &Arc<CalculusDescriptor>) -> Self {
                $name {
                    desc: desc.clone(),
                    coeffs: vec![AlgebraElement::zero(); desc.rank.pow($order)],
                }
            }

            pub fn from_coeffs(desc: &Arc<CalculusDescriptor>, coeffs: Vec<AlgebraElement<C>>) -> Self {
                assert_eq!(
                    coeffs.len(),
                    desc.rank.pow($order),
                    "wrong number of coefficients"
                );
                $name {
                    desc: desc.clone(),
                    coeffs,
                }
            }

            pub fn is_zero(&self) -> bool {
                self.coeffs.iter().all(AlgebraElement::is_zero)
            }

            pub fn l1_norm(&self) -> C::Magnitude {
                self.coeffs
                    .iter()
                    .fold(C::Magnitude::zero(), |acc, a| acc + a.l1_norm())
            }

            /// `X · a`, acting on the right coefficients.
            pub fn right_mul(&self, a: &AlgebraElement<C>) -> Self {
                self.map(|x| x * a)
            }

            /// `a · X`; legal coefficientwise because the basis is central.
            pub fn left_mul(&self, a: &AlgebraElement<C>) -> Self {
                self.map(|x| a * x)
            }

            pub fn scale(&self, c: &C) -> Self {
                self.map(|x| x.scale(c))
            }

            pub fn map(&self, f: impl Fn(&AlgebraElement<C>) -> AlgebraElement<C>) -> Self {
                $name {
                    desc: self.desc.clone(),
                    coeffs: self.coeffs.iter().map(f).collect(),
                }
            }

            fn zip(
                &self,
                other: &Self,
                f: impl Fn(&AlgebraElement<C>, &AlgebraElement<C>) -> AlgebraElement<C>,
            ) -> Self {
                self.desc.assert_same(&other.desc);
                $name {
                    desc: self.desc.clone(),
                    coeffs: self
                        .coeffs
                        .iter()
                        .zip(&other.coeffs)
                        .map(|(a, b)| f(a, b))
                        .collect(),
                }
            }

            pub fn try_add(&self, other: &Self) -> Result<Self, CalculusError> {
                self.desc.check_same(&other.desc)?;
                Ok(self.zip(other, |a, b| a + b))
            }

            pub fn try_sub(&self, other: &Self) -> Result<Self, CalculusError> {
                self.desc.check_same(&other.desc)?;
                Ok(self.zip(other, |a, b| a - b))
            }

            pub fn rank(&self) -> usize {
                self.desc.rank
            }
        }

        impl<'a, C: Coefficient> Add<&'a $name<C>> for &'a $name<C> {
            type Output = $name<C>;
            fn add(self, rhs: &'a $name<C>) -> $name<C> {
                self.zip(rhs, |a, b| a + b)
            }
        }

        impl<'a, C: Coefficient> Sub<&'a $name<C>> for &'a $name<C> {
            type Output = $name<C>;
            fn sub(self, rhs: &'a $name<C>) -> $name<C> {
                self.zip(rhs, |a, b| a - b)
            }
        }

        impl<C: Coefficient> Neg for &$name<C> {
            type Output = $name<C>;
            fn neg(self) -> $name<C> {
                self.map(|x| -x)
            }
        }

        impl<C: Coefficient> fmt::Debug for $name<C> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_struct(stringify!($name))
                    .field("calculus", &self.desc.label)
                    .field("coeffs", &self.coeffs)
                    .finish()
            }
        }
    };
}

dense_tensor!(OneForm, 1);
dense_tensor!(TensorSquare, 2);
dense_tensor!(TensorCube, 3);

impl<C: Coefficient> OneForm<C> {
    /// `e_i · a`.
    pub fn basis(desc: &Arc<CalculusDescriptor>, i: usize, a: AlgebraElement<C>) -> Self {
        let mut w = Self::zero(desc);
        w.coeffs[i] = a;
        w
    }

    pub fn get(&self, i: usize) -> &AlgebraElement<C> {
        &self.coeffs[i]
    }

    /// `ω ⊗ η`, coefficients `ω_j η_l`.
    pub fn tensor(&self, other: &OneForm<C>) -> TensorSquare<C> {
        self.desc.assert_same(&other.desc);
        let n = self.rank();
        let mut out = TensorSquare::zero(&self.desc);
        for j in 0..n {
            for l in 0..n {
                out.coeffs[j * n + l] = &self.coeffs[j] * &other.coeffs[l];
            }
        }
        out
    }

    /// `e_i ⊗ X` for a basis leg in front of a tensor square.
    pub fn basis_tensor(i: usize, x: &TensorSquare<C>) -> TensorCube<C> {
        let n = x.rank();
        let mut out = TensorCube::zero(&x.desc);
        for j in 0..n {
            for k in 0..n {
                *out.get_mut(i, j, k) = x.get(j, k).clone();
            }
        }
        out
    }
}

impl<C: Coefficient> TensorSquare<C> {
    /// `e_i ⊗ e_j · a`.
    pub fn basis(desc: &Arc<CalculusDescriptor>, i: usize, j: usize, a: AlgebraElement<C>) -> Self {
        let mut x = Self::zero(desc);
        *x.get_mut(i, j) = a;
        x
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgebraElement<C> {
        &self.coeffs[i * self.desc.rank + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut AlgebraElement<C> {
        let n = self.desc.rank;
        &mut self.coeffs[i * n + j]
    }

    /// The flip: `(σX)_ij = X_ji`.
    pub fn sigma(&self) -> Self {
        let n = self.rank();
        let mut out = Self::zero(&self.desc);
        for i in 0..n {
            for j in 0..n {
                *out.get_mut(i, j) = self.get(j, i).clone();
            }
        }
        out
    }

    /// `(X + σX)/2`.
    pub fn p_sym(&self) -> Self {
        (self + &self.sigma()).scale(&C::half())
    }

    /// `(1 − P_sym)X = (X − σX)/2`.
    pub fn antisym(&self) -> Self {
        (self - &self.sigma()).scale(&C::half())
    }

    /// `∧X` on the `i < j` basis: `X_ij − X_ji`.
    pub fn wedge(&self) -> TwoForm<C> {
        let n = self.rank();
        let mut w = TwoForm::zero(&self.desc);
        for i in 0..n {
            for j in i + 1..n {
                w.set(i, j, self.get(i, j) - self.get(j, i));
            }
        }
        w
    }

    /// `X ⊗ η`, coefficients `X_jk η_l`.
    pub fn tensor(&self, eta: &OneForm<C>) -> TensorCube<C> {
        self.desc.assert_same(&eta.desc);
        let n = self.rank();
        let mut out = TensorCube::zero(&self.desc);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    *out.get_mut(j, k, l) = self.get(j, k) * &eta.coeffs[l];
                }
            }
        }
        out
    }

    /// `X ⊗ e_l`: the basis leg is central, so coefficients are unchanged.
    pub fn tensor_basis(&self, l: usize) -> TensorCube<C> {
        let n = self.rank();
        let mut out = TensorCube::zero(&self.desc);
        for j in 0..n {
            for k in 0..n {
                *out.get_mut(j, k, l) = self.get(j, k).clone();
            }
        }
        out
    }
}

impl<C: Coefficient> TensorCube<C> {
    pub fn basis(desc: &Arc<CalculusDescriptor>, i: usize, j: usize, k: usize, a: AlgebraElement<C>) -> Self {
        let mut t = Self::zero(desc);
        *t.get_mut(i, j, k) = a;
        t
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &AlgebraElement<C> {
        let n = self.desc.rank;
        &self.coeffs[(i * n + j) * n + k]
    }

    pub fn get_mut(&mut self, i: usize, j: usize, k: usize) -> &mut AlgebraElement<C> {
        let n = self.desc.rank;
        &mut self.coeffs[(i * n + j) * n + k]
    }

    /// `id ⊗ σ`: `(σ₂₃T)_ijk = T_ikj`.
    pub fn sigma23(&self) -> Self {
        let n = self.rank();
        let mut out = Self::zero(&self.desc);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    *out.get_mut(i, j, k) = self.get(i, k, j).clone();
                }
            }
        }
        out
    }

    /// `(1 − P_sym)₂₃ = (T − σ₂₃T)/2`.
    pub fn antisym23(&self) -> Self {
        (self - &self.sigma23()).scale(&C::half())
    }
}

/// `Σ_{i<j} e_i ∧ e_j w_ij`; zero coefficients are not stored.
#[derive(Clone, PartialEq)]
pub struct TwoForm<C> {
    pub desc: Arc<CalculusDescriptor>,
    coeffs: BTreeMap<(usize, usize), AlgebraElement<C>>,
}

impl<C: Coefficient> TwoForm<C> {
    pub fn zero(desc: &Arc<CalculusDescriptor>) -> Self {
        TwoForm {
            desc: desc.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    /// `e_i ∧ e_j · a`, normalized to the `i < j` basis.
    pub fn basis(desc: &Arc<CalculusDescriptor>, i: usize, j: usize, a: AlgebraElement<C>) -> Self {
        let mut w = Self::zero(desc);
        w.add_basis(i, j, &a);
        w
    }

    /// Coefficient of `e_i ∧ e_j` for `i < j`.
    pub fn get(&self, i: usize, j: usize) -> AlgebraElement<C> {
        assert!(i < j, "two-form coefficients are indexed by i < j");
        self.coeffs.get(&(i, j)).cloned().unwrap_or_default()
    }

    fn set(&mut self, i: usize, j: usize, a: AlgebraElement<C>) {
        if a.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), a);
        }
    }

    /// Adds `e_i ∧ e_j · a`, using `e_j ∧ e_i = −e_i ∧ e_j`.
    pub fn add_basis(&mut self, i: usize, j: usize, a: &AlgebraElement<C>) {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => {}
            std::cmp::Ordering::Less => {
                let v = &self.get(i, j) + a;
                self.set(i, j, v);
            }
            std::cmp::Ordering::Greater => {
                let v = &self.get(j, i) - a;
                self.set(j, i, v);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &AlgebraElement<C>)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn l1_norm(&self) -> C::Magnitude {
        self.coeffs
            .values()
            .fold(C::Magnitude::zero(), |acc, a| acc + a.l1_norm())
    }

    pub fn right_mul(&self, a: &AlgebraElement<C>) -> Self {
        let mut out = Self::zero(&self.desc);
        for (&(i, j), x) in &self.coeffs {
            out.set(i, j, x * a);
        }
        out
    }

    /// `Q⁻¹`: `e_i ∧ e_j · a ↦ ½(e_i ⊗ e_j − e_j ⊗ e_i) · a`.
    pub fn q_inverse(&self) -> TensorSquare<C> {
        let mut out = TensorSquare::zero(&self.desc);
        for (&(i, j), a) in &self.coeffs {
            let half = a.scale(&C::half());
            *out.get_mut(i, j) = &out.get(i, j).clone() + &half;
            *out.get_mut(j, i) = &out.get(j, i).clone() - &half;
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, CalculusError> {
        self.desc.check_same(&other.desc)?;
        Ok(self + other)
    }
}

impl<'a, C: Coefficient> Add<&'a TwoForm<C>> for &'a TwoForm<C> {
    type Output = TwoForm<C>;
    fn add(self, rhs: &'a TwoForm<C>) -> TwoForm<C> {
        self.desc.assert_same(&rhs.desc);
        let mut out = self.clone();
        for (&(i, j), a) in &rhs.coeffs {
            out.add_basis(i, j, a);
        }
        out
    }
}

impl<'a, C: Coefficient> Sub<&'a TwoForm<C>> for &'a TwoForm<C> {
    type Output = TwoForm<C>;
    fn sub(self, rhs: &'a TwoForm<C>) -> TwoForm<C> {
        self.desc.assert_same(&rhs.desc);
        let mut out = self.clone();
        for (&(i, j), a) in &rhs.coeffs {
            out.add_basis(i, j, &-a);
        }
        out
    }
}

impl<C: Coefficient> fmt::Debug for TwoForm<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()
    }
}
