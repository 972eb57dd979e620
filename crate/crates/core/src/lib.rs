//! Threshold phenomena for `u_t = Δu + f(u)` started from indicator data.
//!
//! - [`nonlinearity`]: reaction terms, their flows, potentials and envelope rates.
//! - [`solver`]: Crank-Nicolson splitting solver on the line or in radial symmetry.
//! - [`special`]: error function, incomplete gamma and adaptive quadrature.
//! - [`bounds`]: heat-kernel formulas and sub/supersolution certificates.
//! - [`threshold`]: run classification and bisection of the critical radius.

pub mod bounds;
pub mod nonlinearity;
pub mod solver;
pub mod special;
pub mod threshold;
pub mod tridiag;

pub use nonlinearity::{Kind, NonlinearitySpec, ReactionMode, StructureConstants};
pub use solver::{Boundary, FieldState, Observables, Solver, SolverConfig, Splitting};
pub use bounds::{CertificateVerdict, HeatIndicatorKernel};
pub use threshold::{bisect_threshold, classify, ClassificationRule, ThresholdResult, Verdict};
