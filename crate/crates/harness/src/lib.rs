//! Sweeps over ε or θ, least-squares slope fits, reproduction of the slope
//! tables and the asymptotic corridor checks, on top of `threshold-core`.

pub mod fit;
pub mod manifest;
pub mod plan;
pub mod presets;
pub mod reproduce;
pub mod sweep;
pub mod theta;
pub mod verify;

pub use fit::{fit, FitError, FitResult, Transform};
pub use manifest::Manifest;
pub use plan::{AmplitudeRule, PlanError, SweepPlan, SweepVariable};
pub use presets::Budget;
pub use reproduce::{reproduce_table, reproduce_table_with, TableId, TableOptions, TableReport};
pub use sweep::{read_csv, run_sweep, write_csv, SweepError, SweepRecord, SweepRow};
pub use theta::{theta_dependence_study, ThetaStudy};
pub use verify::{verify_bounds, BoundsReport};
