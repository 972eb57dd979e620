//! Unit-amplitude bistable threshold as a function of θ.

use crate::fit::{fit, FitResult, Transform};
use crate::plan::SweepPlan;
use crate::presets::{self, Budget};
use crate::reproduce::ReproduceError;
use crate::sweep::{run_sweep, SweepRow};

#[derive(Debug, Clone)]
pub struct ThetaStudy {
    /// `L*` against `θ` on the small-θ grid.
    pub near_zero: FitResult,
    /// `L*` against `ln(1/(1-2θ))` on the grid close to 1/2.
    pub near_half: FitResult,
    pub near_zero_rows: Vec<SweepRow>,
    pub near_half_rows: Vec<SweepRow>,
}

impl ThetaStudy {
    pub fn l_star(rows: &[SweepRow]) -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|t| (r.job.value, t.l_star)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, f, rows) in [
            ("near 0, L* vs theta", &self.near_zero, &self.near_zero_rows),
            ("near 1/2, L* vs ln(1/(1-2 theta))", &self.near_half, &self.near_half_rows),
        ] {
            s += &format!("{name}: slope {:.4} intercept {:.4} r2 {:.4}\n", f.slope, f.intercept, f.r_squared);
            for (theta, l) in Self::l_star(rows) {
                s += &format!("  theta {theta:.3}  L* {l:.4}\n");
            }
        }
        s
    }
}

pub fn theta_plans(budget: Budget) -> (SweepPlan, SweepPlan) {
    let (zero, half) = match budget {
        Budget::Desk => (presets::THETA_NEAR_ZERO_DESK, presets::THETA_NEAR_HALF_DESK),
        Budget::Full => (presets::THETA_NEAR_ZERO_FULL, presets::THETA_NEAR_HALF_FULL),
    };
    (presets::load(zero).expect("built-in preset"), presets::load(half).expect("built-in preset"))
}

fn fitted(plan: &SweepPlan, transform: Transform) -> Result<(FitResult, Vec<SweepRow>), ReproduceError> {
    let rows = run_sweep(plan)?;
    if let Some(bad) = rows.iter().find(|r| r.outcome.is_err()) {
        return Err(ReproduceError::RowFailures {
            theta: bad.job.value,
            failed: rows.iter().filter(|r| r.outcome.is_err()).count(),
            total: rows.len(),
            first: bad.outcome.as_ref().unwrap_err().clone(),
        });
    }
    let f = fit(&ThetaStudy::l_star(&rows), transform)?;
    Ok((f, rows))
}

/// Grids default to the presets of `budget` when `None`.
pub fn theta_dependence_study(
    near_zero_grid: Option<Vec<f64>>,
    near_half_grid: Option<Vec<f64>>,
    budget: Budget,
    jobs: Option<usize>,
) -> Result<ThetaStudy, ReproduceError> {
    let (mut zero, mut half) = theta_plans(budget);
    if let Some(g) = near_zero_grid {
        zero.grid = g;
    }
    if let Some(g) = near_half_grid {
        half.grid = g;
    }
    if let Some(j) = jobs {
        zero.jobs = j;
        half.jobs = j;
    }
    let (near_zero, near_zero_rows) = fitted(&zero, Transform::LinearVsTheta)?;
    let (near_half, near_half_rows) = fitted(&half, Transform::LinearVsLnInv1Minus2Theta)?;
    Ok(ThetaStudy {
        near_zero,
        near_half,
        near_zero_rows,
        near_half_rows,
    })
}
