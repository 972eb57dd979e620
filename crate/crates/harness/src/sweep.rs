//! Parallel execution of sweep plans.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use threshold_core::{bisect_threshold, Solver, ThresholdResult};

use crate::plan::{Job, PlanError, SweepPlan};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("all {0} grid points failed")]
    AllRowsFailed(usize),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Outcome for one grid value.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub job: Job,
    pub outcome: Result<ThresholdResult, String>,
    pub wall_seconds: f64,
}

impl SweepRow {
    pub fn record(&self) -> Option<SweepRecord> {
        let r = self.outcome.as_ref().ok()?;
        let j = &self.job;
        Some(SweepRecord {
            kind: j.spec.kind.to_string(),
            r: j.spec.r,
            theta: j.spec.theta,
            p: j.spec.p,
            epsilon: j.epsilon,
            amplitude: j.amplitude,
            l_low: r.l_low,
            l_high: r.l_high,
            l_star: r.l_star,
            iterations: r.iterations,
            horizon_t: r.horizon,
            dx: j.solver.dx,
            dt: j.solver.dt,
            wall_seconds: self.wall_seconds,
        })
    }
}

/// One CSV row; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub kind: String,
    pub r: f64,
    pub theta: f64,
    pub p: f64,
    pub epsilon: f64,
    pub amplitude: f64,
    #[serde(rename = "L_low")]
    pub l_low: f64,
    #[serde(rename = "L_high")]
    pub l_high: f64,
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub iterations: usize,
    #[serde(rename = "horizon_T")]
    pub horizon_t: f64,
    pub dx: f64,
    pub dt: f64,
    pub wall_seconds: f64,
}

pub fn run_job(job: &Job) -> Result<ThresholdResult, String> {
    let solver = Solver::new(job.solver.clone()).map_err(|e| e.to_string())?;
    bisect_threshold(&solver, &job.spec, job.amplitude, job.epsilon, &job.rule, &job.bisection).map_err(|e| e.to_string())
}

/// Runs every grid point on `plan.jobs` workers; rows come back in grid order.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>, SweepError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let jobs: Vec<Job> = (0..plan.grid.len()).map(|i| plan.job(i)).collect();
    let rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        jobs.into_par_iter()
            .map(|job| {
                let start = Instant::now();
                let outcome = run_job(&job);
                let wall_seconds = if plan.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
                SweepRow { job, outcome, wall_seconds }
            })
            .collect()
    });
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(SweepError::AllRowsFailed(rows.len()));
    }
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(out: W, records: &[SweepRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(l: f64) -> SweepRecord {
        SweepRecord {
            kind: "ignition".into(),
            r: 1.0,
            theta: 0.5,
            p: 2.0,
            epsilon: 0.1 / 3.0,
            amplitude: 0.5 + 0.1 / 3.0,
            l_low: l - 0.005,
            l_high: l + 0.005,
            l_star: l,
            iterations: 9,
            horizon_t: 60.0,
            dx: 0.05,
            dt: 0.05,
            wall_seconds: 0.123456789,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![record(std::f64::consts::PI), record(1e-7), SweepRecord { epsilon: f64::NAN, ..record(2.0) }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "kind,r,theta,p,epsilon,amplitude,L_low,L_high,L_star,iterations,horizon_T,dx,dt,wall_seconds"
        );
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[..2], rows[..2]);
        assert!(back[2].epsilon.is_nan());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.l_star.to_bits(), b.l_star.to_bits());
        }
    }
}
