//! Sweep plans and their configuration file format.
//!
//! A plan file is flat TOML with one section per module:
//!
//! ```toml
//! [nonlinearity]
//! kind = "ignition"
//! r = 1.0
//! theta = 0.5
//!
//! [solver]
//! domain_half_width = 60.0
//! dx = 0.05
//! dt = 0.05
//!
//! [classification]
//! horizon = 60.0
//! horizon_per_log_eps = 8.0
//!
//! [sweep]
//! variable = "epsilon"
//! grid_start = 0.001
//! grid_stop = 0.01
//! grid_points = 8
//! ```
//!
//! Every key has a default; `docs/config.md` lists them all.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use threshold_core::solver::{Boundary, SolverConfig, Splitting};
use threshold_core::threshold::BisectionOptions;
use threshold_core::{ClassificationRule, Kind, NonlinearitySpec, ReactionMode};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot parse plan: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid plan: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, PlanError> {
    Err(PlanError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Epsilon,
    Theta,
}

/// Height of the initial indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeRule {
    /// `θ + ε`; reduces to `ε` for the monostable kind.
    ThetaPlusEps,
    UnitAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// `theta` is replaced by the grid value in θ-sweeps.
    pub spec: NonlinearitySpec,
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub amplitude: AmplitudeRule,
    /// ε used by θ-sweeps with [`AmplitudeRule::ThetaPlusEps`].
    pub epsilon: Option<f64>,
    pub solver: SolverConfig,
    pub rule: ClassificationRule,
    /// The horizon is `max(rule.horizon, horizon_per_log_eps · ln(1/ε))`.
    pub horizon_per_log_eps: f64,
    pub bisection: BisectionOptions,
    /// Lengths in units of `ε^{-(p-1)/2}` and times in units of `ε^{-(p-1)}`.
    pub monostable_units: bool,
    pub jobs: usize,
    /// Write measured wall-clock times; off, the column is 0 and output is reproducible.
    pub record_timing: bool,
}

/// Settings of one grid point after all substitutions.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub index: usize,
    pub value: f64,
    pub spec: NonlinearitySpec,
    pub epsilon: f64,
    pub amplitude: f64,
    pub solver: SolverConfig,
    pub rule: ClassificationRule,
    pub bisection: BisectionOptions,
}

impl SweepPlan {
    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let file: PlanFile = toml::from_str(text)?;
        let plan = file.into_plan()?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.grid.is_empty() {
            return invalid("empty grid");
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return invalid("grid values must be finite");
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return invalid("grid must be strictly monotone");
        }
        if self.jobs == 0 {
            return invalid("jobs must be at least 1");
        }
        if self.monostable_units && self.spec.kind != Kind::DegenerateMonostable {
            return invalid("monostable_units requires the degenerate_monostable kind");
        }
        if self.variable == SweepVariable::Theta && self.amplitude == AmplitudeRule::ThetaPlusEps {
            match self.epsilon {
                Some(e) if e > 0.0 => {}
                _ => return invalid("theta sweeps with theta_plus_eps need a positive sweep.epsilon"),
            }
        }
        for index in 0..self.grid.len() {
            let job = self.job(index);
            job.spec.validate().map_err(|e| PlanError::Invalid(format!("grid value {}: {e}", job.value)))?;
            if self.variable == SweepVariable::Epsilon {
                let top = if job.spec.kind == Kind::DegenerateMonostable { 1.0 } else { 1.0 - job.spec.theta };
                if !(job.epsilon > 0.0 && job.epsilon < top) {
                    return invalid(format!("epsilon {} outside (0, {top})", job.epsilon));
                }
            }
            job.solver.validate().map_err(|e| PlanError::Invalid(format!("grid value {}: {e}", job.value)))?;
            job.rule.validate(&job.spec).map_err(|e| PlanError::Invalid(format!("grid value {}: {e}", job.value)))?;
            if !(job.bisection.resolution > 0.0) {
                return invalid("bisection resolution must be positive");
            }
        }
        Ok(())
    }

    /// Concrete settings for the `index`-th grid value.
    pub fn job(&self, index: usize) -> Job {
        let value = self.grid[index];
        let mut spec = self.spec;
        let epsilon = match self.variable {
            SweepVariable::Epsilon => value,
            SweepVariable::Theta => {
                spec.theta = value;
                self.epsilon.unwrap_or(f64::NAN)
            }
        };
        let amplitude = match self.amplitude {
            AmplitudeRule::UnitAmplitude => 1.0,
            AmplitudeRule::ThetaPlusEps if spec.kind == Kind::DegenerateMonostable => epsilon,
            AmplitudeRule::ThetaPlusEps => spec.theta + epsilon,
        };
        let (length, time) = if self.monostable_units {
            let q = spec.p - 1.0;
            (epsilon.powf(-0.5 * q), epsilon.powf(-q))
        } else {
            (1.0, 1.0)
        };
        let mut solver = self.solver.clone();
        solver.domain_half_width *= length;
        solver.dx *= length;
        solver.dt *= length;
        if self.monostable_units {
            // keep the cell count an integer after rescaling
            let span = if solver.dimension == 1 { 2.0 } else { 1.0 };
            let cells = (span * self.solver.domain_half_width / self.solver.dx).round();
            solver.domain_half_width = cells * solver.dx / span;
        }
        let mut rule = self.rule.clone();
        let log_horizon = if epsilon > 0.0 && epsilon < 1.0 {
            self.horizon_per_log_eps * (1.0 / epsilon).ln()
        } else {
            0.0
        };
        rule.horizon = (rule.horizon * time).max(log_horizon);
        rule.max_horizon = (rule.max_horizon * time).max(rule.horizon);
        rule.check_interval *= time;
        solver.t_final = rule.horizon;
        let mut bisection = self.bisection.clone();
        bisection.resolution *= length;
        bisection.hint = bisection.hint.map(|(a, b)| (a * length, b * length));
        Job {
            index,
            value,
            spec,
            epsilon,
            amplitude,
            solver,
            rule,
            bisection,
        }
    }
}

/// Serialized form of a [`SweepPlan`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub classification: ClassificationSection,
    #[serde(default)]
    pub bisection: BisectionSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearitySection {
    pub kind: Kind,
    pub r: f64,
    pub theta: f64,
    pub p: f64,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            kind: Kind::Ignition,
            r: 1.0,
            theta: 0.5,
            p: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dimension: usize,
    pub domain_half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub boundary: Boundary,
    pub splitting: Splitting,
    pub reaction_mode: ReactionMode,
    pub monostable_units: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            dimension: c.dimension,
            domain_half_width: c.domain_half_width,
            dx: c.dx,
            dt: c.dt,
            boundary: c.boundary,
            splitting: c.splitting,
            reaction_mode: c.reaction_mode,
            monostable_units: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassificationSection {
    pub extinction_level: f64,
    pub propagation_level: f64,
    pub horizon: f64,
    pub horizon_per_log_eps: f64,
    pub max_horizon: f64,
    pub early_exit: bool,
    pub energy_shortcut: bool,
    pub check_interval: f64,
}

impl Default for ClassificationSection {
    fn default() -> Self {
        let r = ClassificationRule::default();
        Self {
            extinction_level: r.extinction_level,
            propagation_level: r.propagation_level,
            horizon: r.horizon,
            horizon_per_log_eps: 0.0,
            max_horizon: r.max_horizon,
            early_exit: r.early_exit,
            energy_shortcut: r.energy_shortcut,
            check_interval: r.check_interval,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BisectionSection {
    pub resolution: f64,
    pub hint_low: Option<f64>,
    pub hint_high: Option<f64>,
    pub max_expansions: usize,
    pub undecided_band: bool,
}

impl Default for BisectionSection {
    fn default() -> Self {
        let b = BisectionOptions::default();
        Self {
            resolution: b.resolution,
            hint_low: None,
            hint_high: None,
            max_expansions: b.max_expansions,
            undecided_band: b.undecided_band,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub amplitude: AmplitudeRule,
    pub epsilon: Option<f64>,
    /// Explicit grid; overrides the generated one.
    pub grid: Option<Vec<f64>>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_points: Option<usize>,
    pub grid_spacing: GridSpacing,
    pub jobs: usize,
    pub record_timing: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Epsilon,
            amplitude: AmplitudeRule::ThetaPlusEps,
            epsilon: None,
            grid: None,
            grid_start: None,
            grid_stop: None,
            grid_points: None,
            grid_spacing: GridSpacing::Log,
            jobs: 1,
            record_timing: true,
        }
    }
}

/// `n` points from `start` to `stop`, uniform in `ln x` or in `x`.
pub fn spaced_grid(start: f64, stop: f64, n: usize, spacing: GridSpacing) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            match spacing {
                GridSpacing::Log => (start.ln() + s * (stop.ln() - start.ln())).exp(),
                GridSpacing::Linear => start + s * (stop - start),
            }
        })
        .collect()
}

impl PlanFile {
    pub fn into_plan(self) -> Result<SweepPlan, PlanError> {
        let n = &self.nonlinearity;
        let spec = NonlinearitySpec {
            kind: n.kind,
            r: n.r,
            theta: if n.kind == Kind::DegenerateMonostable { 0.0 } else { n.theta },
            p: n.p,
        };
        let s = &self.solver;
        let c = &self.classification;
        let solver = SolverConfig {
            dimension: s.dimension,
            domain_half_width: s.domain_half_width,
            dx: s.dx,
            dt: s.dt,
            t_final: c.horizon,
            boundary: s.boundary,
            splitting: s.splitting,
            reaction_mode: s.reaction_mode,
        };
        let rule = ClassificationRule {
            extinction_level: c.extinction_level,
            propagation_level: c.propagation_level,
            horizon: c.horizon,
            max_horizon: c.max_horizon.max(c.horizon),
            early_exit: c.early_exit,
            energy_shortcut: c.energy_shortcut,
            check_interval: c.check_interval,
        };
        let b = &self.bisection;
        let hint = match (b.hint_low, b.hint_high) {
            (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => Some((lo, hi)),
            (None, None) => None,
            _ => return invalid("bisection hint needs 0 < hint_low < hint_high"),
        };
        let bisection = BisectionOptions {
            resolution: b.resolution,
            hint,
            max_expansions: b.max_expansions,
            undecided_band: b.undecided_band,
        };
        let w = &self.sweep;
        let grid = match (&w.grid, w.grid_start, w.grid_stop, w.grid_points) {
            (Some(g), _, _, _) => g.clone(),
            (None, Some(a), Some(z), Some(k)) => {
                if w.grid_spacing == GridSpacing::Log && !(a > 0.0 && z > 0.0) {
                    return invalid("log-spaced grids need positive endpoints");
                }
                spaced_grid(a, z, k, w.grid_spacing)
            }
            (None, None, None, None) => vec![],
            _ => return invalid("generated grids need grid_start, grid_stop and grid_points"),
        };
        Ok(SweepPlan {
            spec,
            variable: w.variable,
            grid,
            amplitude: w.amplitude,
            epsilon: w.epsilon,
            solver,
            rule,
            horizon_per_log_eps: c.horizon_per_log_eps,
            bisection,
            monostable_units: s.monostable_units,
            jobs: w.jobs,
            record_timing: w.record_timing,
        })
    }
}
