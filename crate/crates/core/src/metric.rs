//! The diagonal metric `g₀(e_i ⊗ e_j) = δ_ij` and its conformal
//! deformations `g = k·g₀`.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, InvertiblePair};
use crate::calculus::{CalculusDescriptor, OneForm, TensorCube, TensorSquare};
use crate::scalars::Coefficient;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec<C: Coefficient> {
    Diagonal,
    /// `k·g₀`; the factor multiplies from the left.
    Conformal(InvertiblePair<C>),
}

impl<C: Coefficient> MetricSpec<C> {
    pub fn conformal(pair: InvertiblePair<C>) -> Self {
        MetricSpec::Conformal(pair)
    }

    pub fn factor(&self) -> Option<&InvertiblePair<C>> {
        match self {
            MetricSpec::Diagonal => None,
            MetricSpec::Conformal(p) => Some(p),
        }
    }

    /// `k`, or the unit for `g₀`.
    pub fn k(&self) -> AlgebraElement<C> {
        self.factor().map_or_else(AlgebraElement::one, |p| p.k.clone())
    }

    pub fn k_inv(&self) -> AlgebraElement<C> {
        self.factor().map_or_else(AlgebraElement::one, |p| p.k_inv.clone())
    }

    fn apply_factor(&self, a: AlgebraElement<C>) -> AlgebraElement<C> {
        match self {
            MetricSpec::Diagonal => a,
            MetricSpec::Conformal(p) => &p.k * &a,
        }
    }

    /// `g(X) = k · Σ_i X_ii`.
    pub fn eval(&self, x: &TensorSquare<C>) -> AlgebraElement<C> {
        let trace = (0..x.rank()).fold(AlgebraElement::zero(), |acc, i| &acc + x.get(i, i));
        self.apply_factor(trace)
    }

    /// `g(e_i ⊗ e_j)`.
    pub fn basis_value(&self, i: usize, j: usize) -> AlgebraElement<C> {
        if i == j {
            self.k()
        } else {
            AlgebraElement::zero()
        }
    }

    /// `(g ⊗ id)` on the first two legs: `out_l = k · Σ_i T_iil`.
    pub fn contract_left(&self, t: &TensorCube<C>) -> OneForm<C> {
        let n = t.rank();
        let coeffs = (0..n)
            .map(|l| {
                let s = (0..n).fold(AlgebraElement::zero(), |acc, i| &acc + t.get(i, i, l));
                self.apply_factor(s)
            })
            .collect();
        OneForm::from_coeffs(&t.desc, coeffs)
    }

    /// `V_g(ω)(η) = g(ω ⊗ η)`.
    pub fn v_apply(&self, omega: &OneForm<C>, eta: &OneForm<C>) -> AlgebraElement<C> {
        self.eval(&omega.tensor(eta))
    }
}

pub fn eval_metric<C: Coefficient>(g: &MetricSpec<C>, x: &TensorSquare<C>) -> AlgebraElement<C> {
    g.eval(x)
}

pub fn contract_g_left<C: Coefficient>(g: &MetricSpec<C>, t: &TensorCube<C>) -> OneForm<C> {
    g.contract_left(t)
}

pub fn v_g_apply<C: Coefficient>(g: &MetricSpec<C>, omega: &OneForm<C>, eta: &OneForm<C>) -> AlgebraElement<C> {
    g.v_apply(omega, eta)
}

/// `Ω_{g₀} = Σ_i e_i ⊗ e_i`.
pub fn omega_g0<C: Coefficient>(desc: &Arc<CalculusDescriptor>) -> TensorSquare<C> {
    let mut x = TensorSquare::zero(desc);
    for i in 0..desc.rank {
        *x.get_mut(i, i) = AlgebraElement::one();
    }
    x
}
