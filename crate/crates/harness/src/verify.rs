//! Measured thresholds against the asymptotic corridors.

use serde::{Deserialize, Serialize};
use threshold_core::bounds::predicted_bounds;
use threshold_core::{Kind, NonlinearitySpec};

use crate::plan::{PlanError, SweepPlan};
use crate::presets::{self, Budget};
use crate::reproduce::{table_plan, TableId};
use crate::sweep::{run_sweep, SweepError, SweepRow};

/// Corridor for `ε^{(p-1)/2} L*` at `p = 4, N = 1`; measured values over
/// ε ∈ {0.05, 0.1, 0.2} lie in [0.84, 0.92].
pub const MONOSTABLE_SCALED_CORRIDOR: (f64, f64) = (0.4, 2.0);
/// Corridor for `ε^{(p-1)/2} L* / (ln 1/ε)^{1/2}`; measured values lie in [0.49, 0.72].
pub const MONOSTABLE_LOG_CORRIDOR: (f64, f64) = (0.2, 1.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub epsilon: f64,
    pub l_star: f64,
    pub statistic: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// `min(value - lower, upper - value)`; positive iff strictly inside.
    pub margin: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(epsilon: f64, l_star: f64, statistic: &str, value: f64, (lower, upper): (f64, f64)) -> Self {
        let margin = (value - lower).min(upper - value);
        Self {
            epsilon,
            l_star,
            statistic: statistic.into(),
            value,
            lower,
            upper,
            margin,
            pass: margin > 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub spec: NonlinearitySpec,
    pub checks: Vec<BoundCheck>,
    pub failures: Vec<(f64, String)>,
    pub rows: Vec<SweepRow>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!(
                "{} eps {:.4e} L* {:.4} {} = {:.4} in ({:.4}, {:.4}) margin {:+.4}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.epsilon,
                c.l_star,
                c.statistic,
                c.value,
                c.lower,
                c.upper,
                c.margin
            );
        }
        for (e, err) in &self.failures {
            s += &format!("FAIL eps {e:.4e}: {err}\n");
        }
        s
    }
}

/// Base plan for the kind of `spec`, with its parameters substituted.
pub fn bounds_plan(spec: &NonlinearitySpec, epsilons: &[f64], budget: Budget) -> Result<SweepPlan, PlanError> {
    let mut plan = match spec.kind {
        Kind::Ignition => table_plan(TableId::Table1, budget),
        Kind::Bistable => table_plan(TableId::Table2, budget),
        Kind::DegenerateMonostable => presets::load(presets::MONOSTABLE)?,
        other => return Err(PlanError::Invalid(format!("no asymptotic corridor for {other}"))),
    };
    plan.spec = *spec;
    plan.grid = epsilons.to_vec();
    plan.validate()?;
    Ok(plan)
}

pub fn verify_bounds(spec: &NonlinearitySpec, epsilons: &[f64], budget: Budget, jobs: Option<usize>) -> Result<BoundsReport, SweepError> {
    let mut plan = bounds_plan(spec, epsilons, budget)?;
    if let Some(j) = jobs {
        plan.jobs = j;
    }
    verify_plan(&plan)
}

pub fn verify_plan(plan: &SweepPlan) -> Result<BoundsReport, SweepError> {
    let spec = plan.spec;
    let rows = run_sweep(plan)?;
    let mut checks = vec![];
    let mut failures = vec![];
    for row in &rows {
        let e = row.job.epsilon;
        let l = match &row.outcome {
            Ok(r) => r.l_star,
            Err(err) => {
                failures.push((e, err.clone()));
                continue;
            }
        };
        let ln = (1.0 / e).ln();
        match spec.kind {
            Kind::DegenerateMonostable => {
                let scaled = e.powf(0.5 * (spec.p - 1.0)) * l;
                checks.push(BoundCheck::new(e, l, "eps^((p-1)/2) L*", scaled, MONOSTABLE_SCALED_CORRIDOR));
                checks.push(BoundCheck::new(e, l, "eps^((p-1)/2) L* / sqrt(ln 1/eps)", scaled / ln.sqrt(), MONOSTABLE_LOG_CORRIDOR));
            }
            _ => {
                let corridor = predicted_bounds(&spec).map_err(|e| PlanError::Invalid(e.to_string()))?;
                checks.push(BoundCheck::new(e, l, "L*/ln(1/eps)", l / ln, corridor));
            }
        }
    }
    Ok(BoundsReport {
        spec,
        checks,
        failures,
        rows,
    })
}
