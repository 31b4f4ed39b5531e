//! Cubature on Wiener space for McKean-Vlasov equations with scalar
//! interaction `dX = sum_i V_i(X, E[phi_i(X)]) o dB^i`.
//!
//! The numerical core is generic over the scalar type where exact arithmetic
//! is useful (partitions, formulas, interpolation); the f64 aliases below are
//! what the solver uses.

// Negated float comparisons are used on purpose: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubature;
pub mod error;
pub mod lagrange;
pub mod measure;
pub mod model;
pub mod ode;
pub mod partition;
pub mod poly;
pub mod reference;
pub mod scalar;
pub mod taylor;
pub mod tree;

pub use error::{Error, Result};
pub use measure::DiscreteMeasure;
pub use model::{builtin_problem, Problem, ProblemBuilder, ProblemRegistry};
pub use ode::OdeConfig;
pub use reference::{closed_form_example1, euler_mc, McConfig, McEstimate};
pub use tree::{solve, solve_with_progress, Limits, Method, SolverResult};

pub type Partition = partition::Partition<f64>;
pub type PartitionKind = partition::PartitionKind<f64>;
pub type CubatureFormula = cubature::CubatureFormula<f64>;
pub type PiecewiseLinearPath = cubature::PiecewiseLinearPath<f64>;
pub type InterpolationWindow = lagrange::InterpolationWindow<f64>;
pub type ScalarPolynomial = poly::ScalarPolynomial<f64>;

/// Built-in cubature formula in double precision.
pub fn builtin_formula(degree: u32, dim: usize) -> Result<CubatureFormula> {
    cubature::builtin_formula(degree, dim)
}
