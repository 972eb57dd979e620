//! Slope tables for the ignition and bistable thresholds.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use threshold_core::Kind;

use crate::fit::{fit, FitError, FitResult, Transform};
use crate::plan::{spaced_grid, GridSpacing, SweepPlan};
use crate::presets::{self, Budget};
use crate::sweep::{run_sweep, SweepError, SweepRow};

#[derive(Debug, Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{failed} of {total} rows failed at theta = {theta}: {first}")]
    RowFailures { theta: f64, failed: usize, total: usize, first: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TableId {
    /// Ignition slopes.
    Table1,
    /// Bistable slopes.
    Table2,
}

/// Published `(θ, s_m, rescaled s_m)` columns.
pub fn published(table: TableId) -> &'static [(f64, f64, f64)] {
    match table {
        TableId::Table1 => &[
            (0.1, 1.11, 1.05),
            (0.2, 1.20, 1.07),
            (0.3, 1.24, 1.04),
            (0.4, 1.32, 1.02),
            (0.5, 1.43, 1.01),
            (0.6, 1.57, 0.99),
        ],
        TableId::Table2 => &[
            (0.1, 5.12, 1.53),
            (0.15, 4.43, 1.58),
            (0.2, 4.04, 1.61),
            (0.25, 3.78, 1.63),
            (0.3, 3.62, 1.66),
            (0.35, 3.52, 1.67),
            (0.4, 3.45, 1.69),
        ],
    }
}

/// `√(1-θ)` for ignition, `√(θ(1-θ))` for bistable.
pub fn rescale_factor(kind: Kind, theta: f64) -> f64 {
    match kind {
        Kind::Bistable => (theta * (1.0 - theta)).sqrt(),
        _ => (1.0 - theta).sqrt(),
    }
}

#[derive(Debug, Clone)]
pub struct TableOptions {
    pub budget: Budget,
    /// Defaults to the desk columns or every published column.
    pub thetas: Option<Vec<f64>>,
    /// ε range of the fit; defaults to the preset's.
    pub window: Option<(f64, f64)>,
    pub points: Option<usize>,
    pub jobs: Option<usize>,
    pub record_timing: bool,
}

impl TableOptions {
    pub fn new(budget: Budget) -> Self {
        Self {
            budget,
            thetas: None,
            window: None,
            points: None,
            jobs: None,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub theta: f64,
    pub fit: FitResult,
    pub rescaled: f64,
    pub published_slope: Option<f64>,
    pub published_rescaled: Option<f64>,
    pub rows: Vec<SweepRow>,
}

impl TableRow {
    pub fn slope_delta(&self) -> Option<f64> {
        self.published_slope.map(|p| self.fit.slope - p)
    }

    pub fn rescaled_delta(&self) -> Option<f64> {
        self.published_rescaled.map(|p| self.rescaled - p)
    }
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub table: TableId,
    pub budget: Budget,
    pub window: (f64, f64),
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:?} ({:?}), eps in [{:.3e}, {:.3e}]\n{:>6} {:>8} {:>8} {:>8} {:>9} {:>9} {:>9} {:>7}\n",
            self.table, self.budget, self.window.0, self.window.1, "theta", "s_m", "table", "delta", "rescaled", "table", "delta", "r2"
        );
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        for r in &self.rows {
            s += &format!(
                "{:>6} {:>8.3} {:>8} {:>8} {:>9.3} {:>9} {:>9} {:>7.4}\n",
                r.theta,
                r.fit.slope,
                opt(r.published_slope),
                opt(r.slope_delta()),
                r.rescaled,
                opt(r.published_rescaled),
                opt(r.rescaled_delta()),
                r.fit.r_squared
            );
        }
        s
    }
}

pub fn table_plan(table: TableId, budget: Budget) -> SweepPlan {
    let text = match (table, budget) {
        (TableId::Table1, Budget::Desk) => presets::TABLE1_DESK,
        (TableId::Table1, Budget::Full) => presets::TABLE1_FULL,
        (TableId::Table2, Budget::Desk) => presets::TABLE2_DESK,
        (TableId::Table2, Budget::Full) => presets::TABLE2_FULL,
    };
    presets::load(text).expect("built-in presets are valid")
}

pub fn default_thetas(table: TableId, budget: Budget) -> Vec<f64> {
    match (table, budget) {
        (TableId::Table1, Budget::Desk) => vec![0.3, 0.5],
        (TableId::Table2, Budget::Desk) => vec![0.2, 0.4],
        (t, Budget::Full) => published(t).iter().map(|c| c.0).collect(),
    }
}

/// Fits `L*_ε` against `ln(1/ε)` for each θ column.
pub fn slope_for_theta(plan: &SweepPlan, theta: f64) -> Result<TableRow, ReproduceError> {
    let mut plan = plan.clone();
    plan.spec.theta = theta;
    let rows = run_sweep(&plan)?;
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| r.outcome.is_err()).collect();
    if let Some(first) = failed.first() {
        return Err(ReproduceError::RowFailures {
            theta,
            failed: failed.len(),
            total: rows.len(),
            first: first.outcome.as_ref().unwrap_err().clone(),
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.job.epsilon, r.outcome.as_ref().map(|t| t.l_star).unwrap_or(f64::NAN)))
        .collect();
    let f = fit(&points, Transform::LinearVsLnInvEps)?;
    Ok(TableRow {
        theta,
        fit: f,
        rescaled: rescale_factor(plan.spec.kind, theta) * f.slope,
        published_slope: None,
        published_rescaled: None,
        rows,
    })
}

pub fn reproduce_table(table: TableId, budget: Budget) -> Result<TableReport, ReproduceError> {
    reproduce_table_with(table, &TableOptions::new(budget))
}

pub fn reproduce_table_with(table: TableId, options: &TableOptions) -> Result<TableReport, ReproduceError> {
    let mut plan = table_plan(table, options.budget);
    let lo = plan.grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = plan.grid.iter().cloned().fold(0.0, f64::max);
    let window = options.window.unwrap_or((lo, hi));
    let points = options.points.unwrap_or(plan.grid.len());
    plan.grid = spaced_grid(window.0, window.1, points, GridSpacing::Log);
    if let Some(j) = options.jobs {
        plan.jobs = j;
    }
    plan.record_timing = options.record_timing;
    let thetas = options.thetas.clone().unwrap_or_else(|| default_thetas(table, options.budget));
    let mut rows = vec![];
    for theta in thetas {
        let mut row = slope_for_theta(&plan, theta)?;
        if let Some(&(_, s, r)) = published(table).iter().find(|c| (c.0 - theta).abs() < 1e-9) {
            row.published_slope = Some(s);
            row.published_rescaled = Some(r);
        }
        rows.push(row);
    }
    Ok(TableReport {
        table,
        budget: options.budget,
        window,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_rescaled_columns_are_consistent() {
        for table in [TableId::Table1, TableId::Table2] {
            let kind = if table == TableId::Table1 { Kind::Ignition } else { Kind::Bistable };
            for &(theta, s, r) in published(table) {
                assert!((rescale_factor(kind, theta) * s - r).abs() < 0.011, "{table:?} {theta}");
            }
        }
    }

    #[test]
    fn desk_plans_cover_requested_columns() {
        assert_eq!(default_thetas(TableId::Table1, Budget::Desk), vec![0.3, 0.5]);
        assert_eq!(default_thetas(TableId::Table2, Budget::Full).len(), 7);
        let p = table_plan(TableId::Table2, Budget::Full);
        assert_eq!(p.solver.dx, 0.02);
        assert_eq!(p.solver.domain_half_width, 100.0);
    }
}
