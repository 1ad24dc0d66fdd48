//! Connections given by Christoffel symbols, and everything needed to
//! certify one as Levi-Civita: torsion, `Π_g` compatibility, the dual
//! connection on `(E⊗E)*`, and the `Φ_g` identity.
//!
//! `Γ^i_jk` is stored at `gamma.get(i, j, k)` and means
//! `∇(e_i) = Σ_{j,k} e_j ⊗ e_k Γ^i_jk`. Indices are 0-based in code.

use std::sync::Arc;

use num_traits::Zero;

use crate::algebra::{AlgebraElement, InvertiblePair};
use crate::calculus::{CalculusDescriptor, OneForm, TensorCube, TensorSquare, TwoForm};
use crate::error::ConnectionError;
use crate::metric::{omega_g0, MetricSpec};
use crate::scalars::{Coefficient, Magnitude};

#[derive(Clone, Debug, PartialEq)]
pub struct Connection<C: Coefficient> {
    pub desc: Arc<CalculusDescriptor>,
    pub gamma: TensorCube<C>,
}

impl<C: Coefficient> Connection<C> {
    pub fn new(gamma: TensorCube<C>) -> Self {
        Connection {
            desc: gamma.desc.clone(),
            gamma,
        }
    }

    /// `∇(e_i) = 0` for every basis element.
    pub fn flat(desc: &Arc<CalculusDescriptor>) -> Self {
        Connection::new(TensorCube::zero(desc))
    }

    pub fn rank(&self) -> usize {
        self.desc.rank
    }

    pub fn christoffel(&self, i: usize, j: usize, k: usize) -> &AlgebraElement<C> {
        self.gamma.get(i, j, k)
    }

    /// `∇(e_i)`.
    pub fn nabla_basis(&self, i: usize) -> TensorSquare<C> {
        let n = self.rank();
        let mut x = TensorSquare::zero(&self.desc);
        for j in 0..n {
            for k in 0..n {
                *x.get_mut(j, k) = self.gamma.get(i, j, k).clone();
            }
        }
        x
    }

    fn from_basis_values(desc: &Arc<CalculusDescriptor>, values: &[TensorSquare<C>]) -> Self {
        let n = desc.rank;
        let mut gamma = TensorCube::zero(desc);
        for (i, v) in values.iter().enumerate() {
            for j in 0..n {
                for k in 0..n {
                    *gamma.get_mut(i, j, k) = v.get(j, k).clone();
                }
            }
        }
        Connection::new(gamma)
    }

    /// `∇(Σ e_i a_i) = Σ ∇(e_i) a_i + Σ e_i ⊗ d a_i`.
    pub fn apply(&self, w: &OneForm<C>) -> TensorSquare<C> {
        let mut out = TensorSquare::zero(&self.desc);
        for (i, a) in w.coeffs.iter().enumerate() {
            out = &out + &self.nabla_basis(i).right_mul(a);
            let da = self.desc.exterior_d(a);
            for (l, b) in da.coeffs.iter().enumerate() {
                *out.get_mut(i, l) = out.get(i, l) + b;
            }
        }
        out
    }

    /// `T_∇(e_i) = ∧∇(e_i) + d(e_i)`; right-linearity makes these decisive.
    pub fn torsion(&self) -> Vec<TwoForm<C>> {
        (0..self.rank())
            .map(|i| &self.nabla_basis(i).wedge() + &self.desc.d_basis(i))
            .collect()
    }

    /// `Π_g(∇)(e_i ⊗ e_j a) = (g⊗id)σ₂₃(∇e_i ⊗ e_j + ∇e_j ⊗ e_i)·a + g(e_i⊗e_j)·da`.
    pub fn pi_g(&self, g: &MetricSpec<C>, i: usize, j: usize, a: &AlgebraElement<C>) -> OneForm<C> {
        let cube = &self.nabla_basis(i).tensor_basis(j) + &self.nabla_basis(j).tensor_basis(i);
        let head = g.contract_left(&cube.sigma23()).right_mul(a);
        let tail = self.desc.exterior_d(a).left_mul(&g.basis_value(i, j));
        &head + &tail
    }

    /// `Π_g(∇)` extended additively over `Σ e_i ⊗ e_j X_ij`.
    pub fn pi_g_tensor(&self, g: &MetricSpec<C>, x: &TensorSquare<C>) -> OneForm<C> {
        let n = self.rank();
        let mut out = OneForm::zero(&self.desc);
        for i in 0..n {
            for j in 0..n {
                if !x.get(i, j).is_zero() {
                    out = &out + &self.pi_g(g, i, j, x.get(i, j));
                }
            }
        }
        out
    }

    /// `Π_g(∇)(e_i⊗e_j a) − d(g(e_i⊗e_j a))`; vanishes for compatible ∇.
    pub fn compat_residual(&self, g: &MetricSpec<C>, i: usize, j: usize, a: &AlgebraElement<C>) -> OneForm<C> {
        let x = TensorSquare::basis(&self.desc, i, j, a.clone());
        &self.pi_g(g, i, j, a) - &self.desc.exterior_d(&g.eval(&x))
    }

    /// The induced connection on `E ⊗ E`:
    /// `e_i⊗e_j·a ↦ σ₂₃(∇e_i⊗e_j)a + e_i⊗∇(e_j)a + e_i⊗e_j⊗da`.
    pub fn lifted(&self, x: &TensorSquare<C>) -> TensorCube<C> {
        let n = self.rank();
        let mut out = TensorCube::zero(&self.desc);
        for i in 0..n {
            for j in 0..n {
                let a = x.get(i, j);
                if a.is_zero() {
                    continue;
                }
                let first = self.nabla_basis(i).tensor_basis(j).sigma23();
                let second = OneForm::basis_tensor(i, &self.nabla_basis(j));
                out = &out + &(&first + &second).right_mul(a);
                for (l, b) in self.desc.exterior_d(a).coeffs.iter().enumerate() {
                    *out.get_mut(i, j, l) = out.get(i, j, l) + b;
                }
            }
        }
        out
    }

    /// Components of `∇_{(E⊗E)*} g` against the coordinate functionals of
    /// `e_i ⊗ e_j`: `d(g(e_i⊗e_j)) − (g⊗id)∇_{E⊗E}(e_i⊗e_j)`, row-major.
    pub fn dual_residual(&self, g: &MetricSpec<C>) -> Vec<OneForm<C>> {
        let n = self.rank();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = TensorSquare::basis(&self.desc, i, j, AlgebraElement::one());
                let dg = self.desc.exterior_d(&g.basis_value(i, j));
                out.push(&dg - &g.contract_left(&self.lifted(&x)));
            }
        }
        out
    }

    /// `∇ − other` as a Christoffel increment.
    pub fn difference(&self, other: &Connection<C>) -> TensorCube<C> {
        &self.gamma - &other.gamma
    }

    /// Copy with `Γ^i_jk` shifted by `delta`.
    pub fn perturbed(&self, i: usize, j: usize, k: usize, delta: &AlgebraElement<C>) -> Self {
        let mut out = self.clone();
        *out.gamma.get_mut(i, j, k) = self.gamma.get(i, j, k) + delta;
        out
    }

    pub fn l1_norm(&self) -> C::Magnitude {
        self.gamma.l1_norm()
    }
}

/// Residual budget for numeric mode. In exact mode only a literal zero
/// passes and none of this applies.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerance {
    pub multiplier: f64,
    /// Product-of-norms factor for the quantities being compared.
    pub scale: f64,
    /// Inverse residual inherited from `k·k⁻¹ ≈ 1`.
    pub inherited: f64,
}

impl Tolerance {
    pub const DEFAULT_MULTIPLIER: f64 = 10.0;
    pub const ENV_VAR: &'static str = "NCG_TOLERANCE_MULT";

    /// Multiplier from `NCG_TOLERANCE_MULT`, falling back to the default.
    pub fn multiplier_from_env() -> f64 {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|m| m.is_finite() && *m > 0.0)
            .unwrap_or(Self::DEFAULT_MULTIPLIER)
    }

    pub fn new(multiplier: f64) -> Self {
        Tolerance {
            multiplier,
            scale: 1.0,
            inherited: 0.0,
        }
    }

    /// Scale `((1+‖k‖)(1+‖k⁻¹‖)(1+‖Γ₀‖))²` — residuals here are at most
    /// quadratic in each of those operands.
    pub fn for_problem<C: Coefficient>(multiplier: f64, k: Option<&InvertiblePair<C>>, base: &Connection<C>) -> Self {
        let (kn, kin, inherited) = match k {
            Some(p) => (
                p.k.l1_norm().to_f64(),
                p.k_inv.l1_norm().to_f64(),
                p.residual_bound.to_f64(),
            ),
            None => (1.0, 1.0, 0.0),
        };
        let s = (1.0 + kn) * (1.0 + kin) * (1.0 + base.l1_norm().to_f64());
        Tolerance {
            multiplier,
            scale: s * s,
            inherited,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.multiplier * f64::EPSILON * self.scale + self.scale * self.inherited
    }

    pub fn accepts<M: Magnitude>(&self, exact: bool, norm: &M) -> bool {
        if exact {
            norm.is_zero()
        } else {
            norm.to_f64() <= self.threshold()
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(Tolerance::DEFAULT_MULTIPLIER)
    }
}

/// `(i, j, a)` compatibility probe.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe<C: Coefficient> {
    pub i: usize,
    pub j: usize,
    pub a: AlgebraElement<C>,
    pub label: String,
}

/// All ordered basis pairs against `1, U, V, U⁻¹, V⁻¹`.
///
/// This is enough: the residual at `(i, j, a)` equals the residual at
/// `(i, j, 1)` times `a`, because both `Π_g` and `d∘g` obey the same
/// Leibniz rule in `a`. Generators are kept to exercise that rule.
pub fn default_probes<C: Coefficient>(desc: &CalculusDescriptor) -> Vec<Probe<C>> {
    let one = C::one();
    let gens = [
        ("1", AlgebraElement::one()),
        ("U", AlgebraElement::u()),
        ("V", AlgebraElement::v()),
        ("U^-1", AlgebraElement::monomial(one.clone(), -1, 0)),
        ("V^-1", AlgebraElement::monomial(one, 0, -1)),
    ];
    let mut out = Vec::new();
    for i in 0..desc.rank {
        for j in 0..desc.rank {
            for (name, a) in &gens {
                out.push(Probe {
                    i,
                    j,
                    a: a.clone(),
                    label: format!("e{}⊗e{}·{}", i + 1, j + 1, name),
                });
            }
        }
    }
    out
}

fn negligible<C: Coefficient>(norm: &C::Magnitude, reference: f64) -> bool {
    if C::EXACT {
        norm.is_zero()
    } else {
        norm.to_f64() <= 64.0 * f64::EPSILON * (1.0 + reference)
    }
}

fn require_levi_civita_for_g0<C: Coefficient>(base: &Connection<C>) -> Result<(), ConnectionError> {
    let scale = base.l1_norm().to_f64();
    for (i, t) in base.torsion().iter().enumerate() {
        if !negligible::<C>(&t.l1_norm(), scale) {
            return Err(ConnectionError::BaseNotLeviCivita(format!(
                "torsion at e{} is nonzero",
                i + 1
            )));
        }
    }
    let g0 = MetricSpec::Diagonal;
    let one = AlgebraElement::one();
    for i in 0..base.rank() {
        for j in 0..base.rank() {
            if !negligible::<C>(&base.compat_residual(&g0, i, j, &one).l1_norm(), scale) {
                return Err(ConnectionError::BaseNotLeviCivita(format!(
                    "not compatible with g0 at e{}⊗e{}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// Levi-Civita connection of `k·g₀` built from that of `g₀`:
/// `∇(e_i) = ∇₀(e_i) + k⁻¹ P_sym(dk ⊗ e_i) − ½ k⁻¹ Ω_{g₀} g₀(dk ⊗ e_i)`.
/// The base connection is checked first.
pub fn conformal_lc_connection<C: Coefficient>(
    base: &Connection<C>,
    k: &InvertiblePair<C>,
) -> Result<Connection<C>, ConnectionError> {
    require_levi_civita_for_g0(base)?;
    Ok(conformal_lc_connection_unchecked(base, k))
}

pub fn conformal_lc_connection_unchecked<C: Coefficient>(base: &Connection<C>, k: &InvertiblePair<C>) -> Connection<C> {
    let desc = &base.desc;
    let dk = desc.exterior_d(&k.k);
    let omega = omega_g0::<C>(desc);
    let g0 = MetricSpec::Diagonal;
    let values: Vec<TensorSquare<C>> = (0..desc.rank)
        .map(|i| {
            let dk_ei = dk.tensor(&OneForm::basis(desc, i, AlgebraElement::one()));
            let sym = dk_ei.p_sym().left_mul(&k.k_inv);
            let trace = omega.right_mul(&g0.eval(&dk_ei)).left_mul(&k.k_inv).scale(&C::half());
            &(&base.nabla_basis(i) + &sym) - &trace
        })
        .collect();
    Connection::from_basis_values(desc, &values)
}

/// `Γ^i_jl = (Γ₀)^i_jl + ½(δ_il A_j + δ_ij A_l − δ_jl A_i)` with
/// `A_j = k⁻¹ ∂_j k`. Only valid when every `d(e_i)` vanishes.
pub fn christoffel_closed_form<C: Coefficient>(
    base: &Connection<C>,
    k: &InvertiblePair<C>,
) -> Result<Connection<C>, ConnectionError> {
    let desc = &base.desc;
    if !desc.basis_closed() {
        return Err(ConnectionError::HypothesisViolated(
            "closed-form Christoffel symbols need d(e_i) = 0 for every basis element".into(),
        ));
    }
    let n = desc.rank;
    let half = C::half();
    let a: Vec<AlgebraElement<C>> = desc
        .derivations
        .iter()
        .map(|d| (&k.k_inv * &k.k.derive(d)).scale(&half))
        .collect();
    let mut gamma = base.gamma.clone();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut x = AlgebraElement::zero();
                if i == l {
                    x = &x + &a[j];
                }
                if i == j {
                    x = &x + &a[l];
                }
                if j == l {
                    x = &x - &a[i];
                }
                if !x.is_zero() {
                    *gamma.get_mut(i, j, l) = gamma.get(i, j, l) + &x;
                }
            }
        }
    }
    Ok(Connection::new(gamma))
}

/// The torsion-free base connection on the Heisenberg calculus:
/// `∇₀(e₃) = −e₁ ⊗ e₂`, `∇₀(e₁) = ∇₀(e₂) = 0`.
pub fn qhm_nabla0<C: Coefficient>(desc: &Arc<CalculusDescriptor>) -> Connection<C> {
    assert_eq!(
        desc.rank, 3,
        "the Heisenberg base connection lives on a rank-3 calculus"
    );
    let mut gamma = TensorCube::zero(desc);
    *gamma.get_mut(2, 0, 1) = -AlgebraElement::one();
    Connection::new(gamma)
}

/// Structure constants `T^m_ij` (stored at `get(m, i, j)`), scalar-valued.
#[derive(Clone, Debug, PartialEq)]
pub struct TTensor<C> {
    pub rank: usize,
    values: Vec<C>,
}

impl<C: Coefficient> TTensor<C> {
    pub fn zero(rank: usize) -> Self {
        TTensor {
            rank,
            values: vec![C::zero(); rank.pow(3)],
        }
    }

    pub fn get(&self, m: usize, i: usize, j: usize) -> &C {
        &self.values[(m * self.rank + i) * self.rank + j]
    }

    pub fn set(&mut self, m: usize, i: usize, j: usize, v: C) {
        let n = self.rank;
        self.values[(m * n + i) * n + j] = v;
    }

    /// `T²₁₃ = T²₃₁ = 1`, everything else zero.
    pub fn qhm() -> Self {
        let mut t = Self::zero(3);
        t.set(1, 0, 2, C::one());
        t.set(1, 2, 0, C::one());
        t
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.rank;
        (0..n).all(|m| (0..n).all(|i| (0..n).all(|j| self.get(m, i, j) == self.get(m, j, i))))
    }
}

/// `L^j_im = ½(T^m_ij + T^i_jm − T^j_mi)`.
pub fn l_from_t<C: Coefficient>(desc: &Arc<CalculusDescriptor>, t: &TTensor<C>) -> TensorCube<C> {
    let n = desc.rank;
    let mut l = TensorCube::zero(desc);
    for j in 0..n {
        for i in 0..n {
            for m in 0..n {
                let v = (t.get(m, i, j).clone() + t.get(i, j, m).clone() - t.get(j, m, i).clone()) * C::half();
                *l.get_mut(j, i, m) = AlgebraElement::scalar(v);
            }
        }
    }
    l
}

/// `∇ = ∇₀ + L` with `L(e_j) = Σ e_i ⊗ e_m L^j_im`.
pub fn qhm_lc_connection<C: Coefficient>(nabla0: &Connection<C>, t: &TTensor<C>) -> Connection<C> {
    Connection::new(&nabla0.gamma + &l_from_t(&nabla0.desc, t))
}

/// Reads `T^m_ij` off `Π_g(∇₀)(e_i ⊗ e_j) = −Σ_m e_m T^m_ij`.
pub fn tt_from_nabla0<C: Coefficient>(
    nabla0: &Connection<C>,
    g: &MetricSpec<C>,
) -> Result<TTensor<C>, ConnectionError> {
    let n = nabla0.rank();
    let mut t = TTensor::zero(n);
    let one = AlgebraElement::one();
    for i in 0..n {
        for j in 0..n {
            let pi = nabla0.pi_g(g, i, j, &one);
            for m in 0..n {
                let c = pi.coeffs[m]
                    .as_scalar()
                    .ok_or_else(|| ConnectionError::NonScalarCoefficient {
                        at: format!("e{} in Π(e{}⊗e{})", m + 1, i + 1, j + 1),
                    })?;
                t.set(m, i, j, -c);
            }
        }
    }
    Ok(t)
}

/// `Φ_g(L)(X) = (g⊗id)σ₂₃(L⊗id)(1+σ)X` for symmetric `X`. `L` is a
/// Christoffel-shaped increment: `L(e_i) = Σ e_p ⊗ e_q L^i_pq`.
pub fn phi_g_apply<C: Coefficient>(
    g: &MetricSpec<C>,
    l: &TensorCube<C>,
    x: &TensorSquare<C>,
) -> Result<OneForm<C>, ConnectionError> {
    if !negligible::<C>(&(x - &x.p_sym()).l1_norm(), x.l1_norm().to_f64()) {
        return Err(ConnectionError::NotSymmetric);
    }
    let y = x + &x.sigma();
    let n = x.rank();
    let mut cube = TensorCube::zero(&x.desc);
    for p in 0..n {
        for q in 0..n {
            for j in 0..n {
                let mut acc = AlgebraElement::zero();
                for i in 0..n {
                    acc = &acc + &(l.get(i, p, q) * y.get(i, j));
                }
                *cube.get_mut(p, q, j) = acc;
            }
        }
    }
    Ok(g.contract_left(&cube.sigma23()))
}

/// `Φ_g(∇ − ∇₀)(X) − (d g(X) − Π_g(∇₀)(X))` for `X = P_sym(e_i ⊗ e_j)`.
pub fn phi_identity_residual<C: Coefficient>(
    g: &MetricSpec<C>,
    lc: &Connection<C>,
    base: &Connection<C>,
    i: usize,
    j: usize,
) -> OneForm<C> {
    let x = TensorSquare::basis(&lc.desc, i, j, AlgebraElement::one()).p_sym();
    let lhs = phi_g_apply(g, &lc.difference(base), &x).expect("P_sym output is symmetric");
    let rhs = &lc.desc.exterior_d(&g.eval(&x)) - &base.pi_g_tensor(g, &x);
    &lhs - &rhs
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub label: String,
    pub norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub torsion: Vec<ResidualEntry>,
    pub compat: Vec<ResidualEntry>,
    /// Total norm of `∇_{(E⊗E)*} g`.
    pub dual: ResidualEntry,
    pub phi_identity: Vec<ResidualEntry>,
    pub inverse: Option<ResidualEntry>,
}

impl ResidualReport {
    pub fn entries(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.torsion
            .iter()
            .chain(&self.compat)
            .chain(std::iter::once(&self.dual))
            .chain(&self.phi_identity)
            .chain(&self.inverse)
    }

    pub fn all_pass(&self) -> bool {
        self.entries().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&ResidualEntry> {
        self.entries().filter(|e| !e.pass).collect()
    }
}

fn entry<C: Coefficient>(label: String, norm: C::Magnitude, tol: &Tolerance) -> ResidualEntry {
    ResidualEntry {
        pass: tol.accepts(C::EXACT, &norm),
        norm: norm.to_f64(),
        label,
    }
}

/// Every residual for `∇` against `g`; `base` enables the `Φ_g` identity.
pub fn residual_report<C: Coefficient>(
    conn: &Connection<C>,
    g: &MetricSpec<C>,
    probes: &[Probe<C>],
    base: Option<&Connection<C>>,
    tol: &Tolerance,
) -> ResidualReport {
    let n = conn.rank();
    let torsion = conn
        .torsion()
        .iter()
        .enumerate()
        .map(|(i, t)| entry::<C>(format!("torsion(e{})", i + 1), t.l1_norm(), tol))
        .collect();
    let compat = probes
        .iter()
        .map(|p| {
            entry::<C>(
                format!("compat({})", p.label),
                conn.compat_residual(g, p.i, p.j, &p.a).l1_norm(),
                tol,
            )
        })
        .collect();
    let dual_norm = conn
        .dual_residual(g)
        .iter()
        .fold(C::Magnitude::zero(), |acc, w| acc + w.l1_norm());
    let dual = entry::<C>("dual_connection".into(), dual_norm, tol);
    let mut phi_identity = Vec::new();
    if let Some(base) = base {
        for i in 0..n {
            for j in i..n {
                let r = phi_identity_residual(g, conn, base, i, j);
                phi_identity.push(entry::<C>(
                    format!("phi_identity(e{}⊗e{})", i + 1, j + 1),
                    r.l1_norm(),
                    tol,
                ));
            }
        }
    }
    let inverse = g
        .factor()
        .map(|p| entry::<C>("inverse(k·k^-1 - 1)".into(), p.residual_bound.clone(), tol));
    ResidualReport {
        torsion,
        compat,
        dual,
        phi_identity,
        inverse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ExactElement as E;
    use crate::scalars::{GaussianRational, Rational};
    use num_traits::One;

    type Q = GaussianRational;

    fn q(re: (i64, i64), im: (i64, i64)) -> E {
        E::scalar(GaussianRational::new(
            Rational::new(re.0, re.1),
            Rational::new(im.0, im.1),
        ))
    }

    fn torus_u() -> (Connection<Q>, InvertiblePair<Q>) {
        let t = CalculusDescriptor::nc_torus();
        (Connection::flat(&t), InvertiblePair::monomial_inverse(&E::u()).unwrap())
    }

    #[test]
    fn apply_examples() {
        let t = CalculusDescriptor::nc_torus();
        let flat = Connection::<Q>::flat(&t);
        assert!(flat.apply(&OneForm::basis(&t, 0, E::one())).is_zero());
        let got = flat.apply(&OneForm::basis(&t, 0, E::u()));
        assert_eq!(
            got,
            TensorSquare::basis(&t, 0, 0, E::monomial(GaussianRational::i(), 1, 0))
        );

        let h = CalculusDescriptor::qhm(1);
        let n0 = qhm_nabla0::<Q>(&h);
        let got = n0.apply(&OneForm::basis(&h, 2, E::one()));
        assert_eq!(got, TensorSquare::basis(&h, 0, 1, -E::one()));
    }

    #[test]
    fn torsion_examples() {
        let t = CalculusDescriptor::nc_torus();
        assert!(Connection::<Q>::flat(&t).torsion().iter().all(TwoForm::is_zero));
        let h = CalculusDescriptor::qhm(1);
        assert!(qhm_nabla0::<Q>(&h).torsion().iter().all(TwoForm::is_zero));
        // the other sign leaves 2 e₁∧e₂ behind
        let h_minus = CalculusDescriptor::qhm(-1);
        assert!(!qhm_nabla0::<Q>(&h_minus).torsion()[2].is_zero());
    }

    #[test]
    fn pi_g_examples() {
        let t = CalculusDescriptor::nc_torus();
        let flat = Connection::<Q>::flat(&t);
        let g0 = MetricSpec::Diagonal;
        assert!(flat.pi_g(&g0, 0, 1, &E::one()).is_zero());
        assert_eq!(
            flat.pi_g(&g0, 0, 0, &E::u()),
            OneForm::basis(&t, 0, E::monomial(GaussianRational::i(), 1, 0))
        );
        let h = CalculusDescriptor::qhm(1);
        let n0 = qhm_nabla0::<Q>(&h);
        assert_eq!(n0.pi_g(&g0, 0, 2, &E::one()), OneForm::basis(&h, 1, -E::one()));
    }

    #[test]
    fn compat_examples() {
        let (flat, k) = torus_u();
        let g0 = MetricSpec::Diagonal;
        let probes = default_probes::<Q>(&flat.desc);
        assert!(probes
            .iter()
            .all(|p| flat.compat_residual(&g0, p.i, p.j, &p.a).is_zero()));
        let g = MetricSpec::conformal(k.clone());
        assert!(!flat.compat_residual(&g, 0, 0, &E::one()).is_zero());
        let lc = conformal_lc_connection(&flat, &k).unwrap();
        assert!(probes.iter().all(|p| lc.compat_residual(&g, p.i, p.j, &p.a).is_zero()));
    }

    #[test]
    fn conformal_k_equals_u() {
        let (flat, k) = torus_u();
        let lc = conformal_lc_connection(&flat, &k).unwrap();
        let half_i = q((0, 1), (1, 2));
        let minus_half_i = q((0, 1), (-1, 2));
        // Γ¹₁₁ = i/2, Γ¹₂₂ = −i/2, Γ²₁₂ = Γ²₂₁ = i/2, rest 0
        let mut expected = TensorCube::zero(&flat.desc);
        *expected.get_mut(0, 0, 0) = half_i.clone();
        *expected.get_mut(0, 1, 1) = minus_half_i;
        *expected.get_mut(1, 0, 1) = half_i.clone();
        *expected.get_mut(1, 1, 0) = half_i;
        assert_eq!(lc.gamma, expected);
        assert_eq!(christoffel_closed_form(&flat, &k).unwrap(), lc);
    }

    #[test]
    fn closed_form_examples() {
        let t = CalculusDescriptor::nc_torus();
        let flat = Connection::<Q>::flat(&t);
        let id = InvertiblePair::identity();
        assert_eq!(christoffel_closed_form(&flat, &id).unwrap(), flat);
        let k = InvertiblePair::monomial_inverse(&E::monomial(GaussianRational::one(), 3, -2)).unwrap();
        let cf = christoffel_closed_form(&flat, &k).unwrap();
        assert_eq!(cf.christoffel(0, 0, 0), &q((0, 1), (3, 2)));
        let kv = InvertiblePair::monomial_inverse(&E::v()).unwrap();
        let cf = christoffel_closed_form(&flat, &kv).unwrap();
        assert_eq!(cf.christoffel(0, 0, 1), &q((0, 1), (1, 2)));
        assert!(cf.christoffel(0, 0, 0).is_zero());

        let h = CalculusDescriptor::qhm(1);
        assert!(matches!(
            christoffel_closed_form(&qhm_nabla0::<Q>(&h), &id),
            Err(ConnectionError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn base_must_be_levi_civita() {
        let (flat, k) = torus_u();
        let bent = flat.perturbed(0, 0, 1, &E::one());
        assert!(matches!(
            conformal_lc_connection(&bent, &k),
            Err(ConnectionError::BaseNotLeviCivita(_))
        ));
    }

    #[test]
    fn qhm_l_values() {
        let h = CalculusDescriptor::qhm(1);
        let l = l_from_t(&h, &TTensor::<Q>::qhm());
        let half = q((1, 2), (0, 1));
        let mut expected = TensorCube::zero(&h);
        for (j, i, m, v) in [
            (0, 1, 2, half.clone()),
            (0, 2, 1, half.clone()),
            (1, 0, 2, -half.clone()),
            (1, 2, 0, -half.clone()),
            (2, 0, 1, half.clone()),
            (2, 1, 0, half),
        ] {
            *expected.get_mut(j, i, m) = v;
        }
        assert_eq!(l, expected);
    }

    #[test]
    fn qhm_levi_civita() {
        let h = CalculusDescriptor::qhm(1);
        let n0 = qhm_nabla0::<Q>(&h);
        let g0 = MetricSpec::Diagonal;
        let t = tt_from_nabla0(&n0, &g0).unwrap();
        assert_eq!(t, TTensor::qhm());
        assert!(t.is_symmetric());
        let lc = qhm_lc_connection(&n0, &t);
        let report = residual_report(&lc, &g0, &default_probes(&h), Some(&n0), &Tolerance::default());
        assert!(report.all_pass(), "{:?}", report.failures());
        assert!(report.phi_identity.len() == 6);
        // Γ³₁₂ = (Γ₀)³₁₂ + L³₁₂ = −1 + ½
        assert_eq!(lc.christoffel(2, 0, 1), &q((-1, 2), (0, 1)));
    }

    #[test]
    fn tt_of_flat_is_zero() {
        let t = CalculusDescriptor::nc_torus();
        let tt = tt_from_nabla0(&Connection::<Q>::flat(&t), &MetricSpec::Diagonal).unwrap();
        assert_eq!(tt, TTensor::zero(2));
    }

    #[test]
    fn tt_rejects_non_scalars() {
        let t = CalculusDescriptor::nc_torus();
        let c = Connection::<Q>::flat(&t).perturbed(0, 0, 0, &E::u());
        assert!(matches!(
            tt_from_nabla0(&c, &MetricSpec::Diagonal),
            Err(ConnectionError::NonScalarCoefficient { .. })
        ));
    }

    #[test]
    fn phi_examples() {
        let (flat, k) = torus_u();
        let t = flat.desc.clone();
        let g0 = MetricSpec::<Q>::Diagonal;
        let x = TensorSquare::basis(&t, 0, 1, E::one()).p_sym();
        assert!(phi_g_apply(&g0, &TensorCube::zero(&t), &x).unwrap().is_zero());
        assert_eq!(
            phi_g_apply(&g0, &TensorCube::zero(&t), &TensorSquare::basis(&t, 0, 1, E::one())),
            Err(ConnectionError::NotSymmetric)
        );
        let g = MetricSpec::conformal(k.clone());
        let lc = conformal_lc_connection(&flat, &k).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(phi_identity_residual(&g, &lc, &flat, i, j).is_zero());
            }
        }
        // the QHM form: Φ(L)(P_sym(e_i⊗e_j)) = Σ_m e_m T^m_ij
        let h = CalculusDescriptor::qhm(1);
        let tt = TTensor::<Q>::qhm();
        let l = l_from_t(&h, &tt);
        for i in 0..3 {
            for j in 0..3 {
                let x = TensorSquare::basis(&h, i, j, E::one()).p_sym();
                let got = phi_g_apply(&g0, &l, &x).unwrap();
                let want = OneForm::from_coeffs(&h, (0..3).map(|m| E::scalar(tt.get(m, i, j).clone())).collect());
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn lifted_examples() {
        let t = CalculusDescriptor::nc_torus();
        let flat = Connection::<Q>::flat(&t);
        assert!(flat.lifted(&TensorSquare::basis(&t, 0, 1, E::one())).is_zero());
        let got = flat.lifted(&TensorSquare::basis(&t, 0, 1, E::u()));
        assert_eq!(
            got,
            TensorCube::basis(&t, 0, 1, 0, E::monomial(GaussianRational::i(), 1, 0))
        );
    }

    #[test]
    fn dual_examples() {
        let (flat, k) = torus_u();
        let g = MetricSpec::conformal(k.clone());
        let lc = conformal_lc_connection(&flat, &k).unwrap();
        assert!(lc.dual_residual(&g).iter().all(OneForm::is_zero));
        assert!(!flat.dual_residual(&g).iter().all(OneForm::is_zero));
    }

    #[test]
    fn numeric_tolerance() {
        let tol = Tolerance::default();
        assert!(tol.accepts(false, &1e-16));
        assert!(!tol.accepts(false, &1e-10));
        assert!(tol.accepts(true, &Rational::zero()));
        assert!(!tol.accepts(true, &Rational::new(1, 1_000_000_000)));
    }
}
