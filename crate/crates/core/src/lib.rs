//! Levi-Civita connections and Ricci/scalar curvature for conformally
//! deformed metrics on differential calculi with a free, central basis of
//! one-forms — the noncommutative 2-torus and a rank-3 quantum Heisenberg
//! calculus are built in.
//!
//! Everything is generic over the coefficient field ([`scalars::Coefficient`]):
//! exact Gaussian rationals or double-precision complex numbers.

pub mod algebra;
pub mod calculus;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod metric;
pub mod report;
pub mod scalars;
pub mod scenario;

pub use algebra::{AlgebraElement, AnyElement, Derivation, ExactElement, InvertiblePair, Key, NumericElement};
pub use error::{AlgebraError, CalculusError, ConnectionError, ScalarError, ScenarioError};
pub use report::{run_scenario, verify, verify_path, ExitStatus, Report};
pub use scalars::{Coefficient, ComplexFloat, GaussianRational, Magnitude, PhaseValue, PhasedScalar, Rational, Theta};
pub use scenario::{load_scenario, load_scenario_str, load_scenario_value, Mode, Preset, Scenario};
