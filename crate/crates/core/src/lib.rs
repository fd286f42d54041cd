//! Physics-informed polynomial chaos expansions.
//!
//! Orthonormal bases on hyperbolic index sets, equality-constrained least
//! squares (KKT and SULM), D-optimal collocation sampling, Karhunen-Loève
//! random fields, and the benchmark problems used to exercise them.

pub mod basis;
pub mod benchmarks;
pub mod constraints;
pub mod error;
pub mod io;
mod linalg;
pub mod model;
pub mod randomfield;
pub mod sampling;
pub mod solvers;

pub use basis::{BasisSpec, InputSpec, Marginal};
pub use error::{Error, Result};
pub use model::Pc2Model;
pub use solvers::{Diagnostics, FitResult, Method, SolverConfig};
