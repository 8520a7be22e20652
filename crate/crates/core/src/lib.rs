//! Global solutions of coagulation equations with multiplicative kernel.
//!
//! Four models are covered: Smoluchowski's and Flory's equations, and their
//! limited-aggregation ("arms") variants. Every solved quantity comes from
//! an explicit generating-function representation; the numerics reduce to
//! scalar root finding plus power-series manipulation. The [`oracle`]
//! module integrates the truncated kinetic systems directly and serves as
//! an independent check.
//!
//! ```
//! use gelsolve::{MassMeasure, Model, Solver};
//!
//! let s = Solver::classic(Model::Smoluchowski, MassMeasure::Monodisperse).unwrap();
//! assert!((s.mass(2.0).unwrap() - 0.5).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod config;
pub mod error;
pub mod measures;
pub mod models;
pub mod oracle;
pub mod output;
pub mod quad;
pub mod roots;
pub mod series;

pub use characteristics::{SolutionState, SolverConfig};
pub use config::{InitialSpec, Output, RunConfig, Spacing, TimeGrid};
pub use error::{Error, Result};
pub use measures::{ArmMeasure, G0Family, GeneratingFunction, MassMeasure, Moments, NuMeasure};
pub use models::{mass_right_derivative_at_gel, GelDerivative, InitialData, Model, Solver};
pub use oracle::{Flavor, OracleState};
pub use series::{LimitingConcentrations, PowerSeries};
