//! Curvature `R(∇) = H∘∇`, its Ricci contraction and the scalar curvature.
//!
//! `H(e_j ⊗ f) = (1 − P_sym)₂₃(∇e_j ⊗ f) + e_j ⊗ Q⁻¹(df)` is evaluated
//! directly on `∇(e_i) = Σ_j e_j ⊗ f_j`, so the `d(e_k)` terms of a
//! non-closed basis are included automatically.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, InvertiblePair};
use crate::calculus::{CalculusDescriptor, OneForm, TensorCube};
use crate::connection::Connection;
use crate::error::ConnectionError;
use crate::metric::MetricSpec;
use crate::scalars::{Coefficient, Rational};

/// `R(∇)(e_i) = Σ e_j ⊗ e_k ⊗ e_l r^i_jkl`, with `r[i].get(j, k, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureCoefficients<C: Coefficient> {
    pub r: Vec<TensorCube<C>>,
}

impl<C: Coefficient> CurvatureCoefficients<C> {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> &AlgebraElement<C> {
        self.r[i].get(j, k, l)
    }

    pub fn rank(&self) -> usize {
        self.r.len()
    }

    pub fn l1_distance(&self, other: &Self) -> C::Magnitude {
        self.r
            .iter()
            .zip(&other.r)
            .map(|(a, b)| (a - b).l1_norm())
            .fold(num_traits::Zero::zero(), |acc, x| acc + x)
    }
}

/// `n × n` matrix of algebra elements, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<C: Coefficient> {
    pub n: usize,
    pub entries: Vec<AlgebraElement<C>>,
}

impl<C: Coefficient> Matrix<C> {
    pub fn zero(n: usize) -> Self {
        Matrix {
            n,
            entries: vec![AlgebraElement::zero(); n * n],
        }
    }

    pub fn get(&self, j: usize, l: usize) -> &AlgebraElement<C> {
        &self.entries[j * self.n + l]
    }

    pub fn get_mut(&mut self, j: usize, l: usize) -> &mut AlgebraElement<C> {
        &mut self.entries[j * self.n + l]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(AlgebraElement::is_zero)
    }

    pub fn l1_distance(&self, other: &Self) -> C::Magnitude {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).l1_norm())
            .fold(num_traits::Zero::zero(), |acc, x| acc + x)
    }
}

/// The definitional pipeline; runs whether or not ∇ is torsion-free.
pub fn curvature_operator<C: Coefficient>(conn: &Connection<C>) -> CurvatureCoefficients<C> {
    let desc = &conn.desc;
    let n = desc.rank;
    let r = (0..n)
        .map(|i| {
            let mut out = TensorCube::zero(desc);
            for j in 0..n {
                let f = OneForm::from_coeffs(desc, (0..n).map(|k| conn.christoffel(i, j, k).clone()).collect());
                if f.is_zero() {
                    continue;
                }
                let first = conn.nabla_basis(j).tensor(&f).antisym23();
                let second = OneForm::basis_tensor(j, &desc.d_one_form(&f).q_inverse());
                out = &out + &(&first + &second);
            }
            out
        })
        .collect();
    CurvatureCoefficients { r }
}

/// `r^i_jkl = ½ Σ_p (Γ^p_jk Γ^i_pl − Γ^p_jl Γ^i_pk) − ½ ∂_l Γ^i_jk + ½ ∂_k Γ^i_jl`,
/// products in the written order. Needs a closed basis.
pub fn closed_form_curvature<C: Coefficient>(
    conn: &Connection<C>,
) -> Result<CurvatureCoefficients<C>, ConnectionError> {
    let desc = &conn.desc;
    if !desc.basis_closed() {
        return Err(ConnectionError::HypothesisViolated(
            "the closed-form curvature needs d(e_i) = 0 for every basis element".into(),
        ));
    }
    let n = desc.rank;
    let half = C::half();
    let g = |i, j, k| conn.christoffel(i, j, k);
    let d = &desc.derivations;
    let r = (0..n)
        .map(|i| {
            let mut cube = TensorCube::zero(desc);
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = AlgebraElement::zero();
                        for p in 0..n {
                            acc = &acc + &(g(p, j, k) * g(i, p, l));
                            acc = &acc - &(g(p, j, l) * g(i, p, k));
                        }
                        acc = &acc - &g(i, j, k).derive(&d[l]);
                        acc = &acc + &g(i, j, l).derive(&d[k]);
                        *cube.get_mut(j, k, l) = acc.scale(&half);
                    }
                }
            }
            cube
        })
        .collect();
    Ok(CurvatureCoefficients { r })
}

/// `Ric(e_j, e_l) = Σ_i r^i_{j i l}`.
///
/// On a free module with central basis the composite of `ζ⁻¹`, `σ₂₃`, `ρ`
/// and evaluation reduces to this index contraction: the functional dual to
/// `e_i` pairs with the middle leg of `R(e_i)`.
pub fn ricci<C: Coefficient>(rc: &CurvatureCoefficients<C>) -> Matrix<C> {
    let n = rc.rank();
    let mut m = Matrix::zero(n);
    for j in 0..n {
        for l in 0..n {
            *m.get_mut(j, l) = (0..n).fold(AlgebraElement::zero(), |acc, i| &acc + rc.get(i, j, i, l));
        }
    }
    m
}

/// `Scal = Σ_{j,l} g(e_j ⊗ e_l) · Ric(e_j, e_l)`.
pub fn scalar_curvature<C: Coefficient>(g: &MetricSpec<C>, ric: &Matrix<C>) -> AlgebraElement<C> {
    let mut s = AlgebraElement::zero();
    for j in 0..ric.n {
        for l in 0..ric.n {
            let gjl = g.basis_value(j, l);
            if !gjl.is_zero() {
                s = &s + &(&gjl * ric.get(j, l));
            }
        }
    }
    s
}

/// Explicit Ricci/scalar formulas for `k·g₀` on the 2-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusReference<C: Coefficient> {
    /// Normalized to match [`curvature_operator`] + [`ricci`].
    pub ricci: Matrix<C>,
    pub scalar: AlgebraElement<C>,
    /// The same expressions without the overall ½ (the "textbook" display).
    pub unhalved_ricci: Matrix<C>,
    pub unhalved_scalar: AlgebraElement<C>,
    /// `−Δk − k(∂₂(k⁻¹)∂₂k − k∂₁(k⁻¹)∂₁k)`, bracket placed as printed in
    /// some references; kept only for comparison.
    pub bracketed_scalar: AlgebraElement<C>,
}

/// With `A = k⁻¹∂₁k`, `B = k⁻¹∂₂k`:
/// `Ric(e₁,e₁) = Ric(e₂,e₂) = −¼(k⁻¹Δk + ∂₁(k⁻¹)∂₁k + ∂₂(k⁻¹)∂₂k)`,
/// `Ric(e₁,e₂) = −Ric(e₂,e₁) = ¼(∂₁(k⁻¹)∂₂k − ∂₂(k⁻¹)∂₁k)`,
/// `Scal = −½(Δk + k∂₂(k⁻¹)∂₂k + k∂₁(k⁻¹)∂₁k)`.
pub fn torus_conformal_reference<C: Coefficient>(
    desc: &Arc<CalculusDescriptor>,
    k: &InvertiblePair<C>,
) -> TorusReference<C> {
    assert_eq!(desc.rank, 2, "torus reference needs a rank-2 calculus");
    let (d1, d2) = (&desc.derivations[0], &desc.derivations[1]);
    let (kk, ki) = (&k.k, &k.k_inv);
    let k1 = kk.derive(d1);
    let k2 = kk.derive(d2);
    let laplace = &k1.derive(d1) + &k2.derive(d2);
    let ki1 = ki.derive(d1);
    let ki2 = ki.derive(d2);

    let diag = &(&(ki * &laplace) + &(&ki1 * &k1)) + &(&ki2 * &k2);
    let off = &(&ki1 * &k2) - &(&ki2 * &k1);
    let scal_core = &(&laplace + &(kk * &(&ki2 * &k2))) + &(kk * &(&ki1 * &k1));

    let build = |c: &Rational| {
        let c = C::from_rational(c);
        let mut m = Matrix::zero(2);
        *m.get_mut(0, 0) = -diag.scale(&c);
        *m.get_mut(1, 1) = -diag.scale(&c);
        *m.get_mut(0, 1) = off.scale(&c);
        *m.get_mut(1, 0) = -off.scale(&c);
        m
    };
    let bracket = &(&ki2 * &k2) - &(kk * &(&ki1 * &k1));
    TorusReference {
        ricci: build(&Rational::new(1, 4)),
        scalar: -scal_core.scale(&C::half()),
        unhalved_ricci: build(&Rational::half()),
        unhalved_scalar: -scal_core.clone(),
        bracketed_scalar: -(&laplace + &(kk * &bracket)),
    }
}
