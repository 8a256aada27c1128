//! Weighted discrete elliptic boundary value problems
//!
//! ```text
//! -Δ(p(i-1, j) Δu(i-1, j)) - ∇(p(i, j-1) ∇u(i, j-1)) = λ f((i, j), u(i, j))
//! ```
//!
//! on `[1, m] x [1, n]` with zero Dirichlet data, written as the algebraic
//! system `M U = λ H(U)`. The crate assembles `M`, analyzes its spectrum,
//! computes critical points of the energy
//! `I(U) = U^T M U / 2 - λ Σ F((i, j), u(i, j))` and audits the parameter
//! regimes in which nontrivial solutions are guaranteed.
//!
//! Nodes are 1-based `(i, j)` and are flattened as `k = (j - 1) m + i`.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod nonlinearity;
pub mod problem;
pub mod regimes;
pub mod solvers;
pub mod spectral;
pub mod verify;

pub use assembly::{assemble_m, SystemMatrix};
pub use energy::EnergyBreakdown;
pub use error::{Error, Result};
pub use grid::{GridFunction, WeightGrid};
pub use nonlinearity::{Kind, NonlinearitySpec, PrimitiveMode, Tabulated};
pub use problem::ProblemInstance;
pub use regimes::{HypothesisParams, ThresholdReport};
pub use solvers::{Method, MethodConfig, SolveOptions, SolveReport};
pub use spectral::SpectrumSummary;
