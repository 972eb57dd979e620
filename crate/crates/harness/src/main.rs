use std::fs;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use threshold_core::bounds::{
    default_monostable_k, monostable_extinction_certificate, toy_extinction_certificate, toy_nonextinction_bound,
    NonextinctionParams,
};
use threshold_core::threshold::bisect_threshold;
use threshold_core::{NonlinearitySpec, Solver};
use threshold_lab::manifest::Manifest;
use threshold_lab::plan::{PlanError, SweepPlan};
use threshold_lab::reproduce::{rescale_factor, TableOptions};
use threshold_lab::sweep::{read_csv, write_csv, SweepError, SweepRecord, SweepRow};
use threshold_lab::{presets, reproduce_table_with, theta_dependence_study, verify, Budget, TableId, Transform};

const EXIT_PLAN: u8 = 2;
const EXIT_ROWS: u8 = 3;
const EXIT_BOUNDS: u8 = 4;

#[derive(Parser)]
#[command(name = "threshold-lab", version = env!("CARGO_PKG_VERSION"), about = "Extinction/propagation thresholds for u_t = u_xx + f(u)")]
struct Cli {
    /// Plan file (flat TOML) or a built-in preset name such as `table1_desk`.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "desk")]
    budget: Budget,
    /// Worker threads; overrides the plan.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Assert that no random numbers are drawn and record it in the manifest.
    #[arg(long, global = true)]
    seedless: bool,
    /// Write 0 in the wall_seconds column so that reruns are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run from the indicator of radius L; writes snapshots and observables.
    Simulate {
        #[arg(long)]
        l: f64,
        /// Defaults to theta + epsilon.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Defaults to the classification horizon.
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        snapshot_every: f64,
    },
    /// One bisection for the critical radius at the given epsilon.
    Threshold {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Runs the plan given by --config; writes sweep.csv and sweep.manifest.json.
    Sweep,
    /// Evaluates an analytic certificate and prints it as a CSV row.
    Certify {
        #[arg(value_enum)]
        which: Certificate,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Level delta of the extinction time ln((delta - theta)/eps); defaults to (1 + theta)/2.
        #[arg(long)]
        delta: Option<f64>,
        /// alpha of the propagation bound.
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        k: f64,
        /// Exponent of the monostable term.
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Constant with f(u) <= K u^p; defaults to r.
        #[arg(long)]
        big_k: Option<f64>,
        #[arg(long, default_value_t = 1)]
        dimension: usize,
    },
    /// Least-squares fit of L_star from a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// ln_inv_eps, theta or ln_inv_1m2theta.
        #[arg(long, default_value = "ln_inv_eps")]
        transform: Transform,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
    },
    /// Reproduces a slope table or the theta study.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        /// Comma-separated theta columns.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Checks measured thresholds against the asymptotic corridors.
    VerifyBounds {
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Certificate {
    ToyExtinction,
    ToyNonextinction,
    Monostable,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Table1,
    Table2,
    Theta,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let plan_error = e.chain().any(|c| {
                c.downcast_ref::<PlanError>().is_some() || matches!(c.downcast_ref::<SweepError>(), Some(SweepError::Plan(_)))
            });
            ExitCode::from(if plan_error { EXIT_PLAN } else { 1 })
        }
    }
}

/// Config text and the plan it defines.
fn load_plan(cli: &Cli) -> Result<(String, SweepPlan)> {
    let name = cli.config.as_deref().context("--config is required")?;
    let text = match presets::by_name(name) {
        Some(t) => t.to_string(),
        None => fs::read_to_string(name).with_context(|| format!("reading {name}"))?,
    };
    let mut plan = match SweepPlan::from_toml(&text) {
        Ok(p) => p,
        // single-run commands do not need a grid
        Err(PlanError::Invalid(m)) if m == "empty grid" => {
            let file: threshold_lab::plan::PlanFile = toml::from_str(&text).map_err(PlanError::from)?;
            file.into_plan()?
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(j) = cli.jobs {
        plan.jobs = j;
    }
    if cli.no_timing {
        plan.record_timing = false;
    }
    Ok((text, plan))
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn write_outputs(cli: &Cli, stem: &str, config_text: &str, started: chrono::DateTime<chrono::Utc>, rows: &[SweepRow]) -> Result<usize> {
    let dir = out_dir(cli)?;
    let csv_name = format!("{stem}.csv");
    let records: Vec<SweepRecord> = rows.iter().filter_map(|r| r.record()).collect();
    write_csv(fs::File::create(dir.join(&csv_name))?, &records)?;
    let mut m = Manifest::new(config_text, started, &csv_name).with_rows(rows);
    m.seedless_asserted = cli.seedless;
    m.timing_recorded = !cli.no_timing;
    fs::write(dir.join(format!("{stem}.manifest.json")), m.to_json())?;
    eprintln!("wrote {} ({} ok, {} failed)", dir.join(&csv_name).display(), m.rows_ok, m.rows_failed);
    Ok(m.rows_failed)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Simulate {
            l,
            amplitude,
            epsilon,
            t_final,
            snapshot_every,
        } => {
            let (_, plan) = load_plan(cli)?;
            let spec = plan.spec;
            let job = SweepPlan { grid: vec![*epsilon], ..plan.clone() }.job(0);
            let amp = amplitude.unwrap_or(job.amplitude);
            let solver = Solver::new(job.solver.clone())?;
            let mut state = solver.initial_indicator(amp, *l)?;
            let dir = out_dir(cli)?;
            let t_end = t_final.unwrap_or(job.rule.horizon);
            let mut obs = csv::Writer::from_path(dir.join("observables.csv"))?;
            obs.write_record(["t", "sup_norm", "center_value", "energy", "mass"])?;
            let mut io_error = None;
            solver.evolve(&mut state, &spec, t_end, *snapshot_every, |st, o| {
                let row = [o.t, o.sup_norm, o.center_value, o.energy, o.mass].map(|v| v.to_string());
                let res = obs.write_record(&row).map_err(anyhow::Error::from).and_then(|_| {
                    st.write_snapshot(dir, "run").map(|_| ()).map_err(anyhow::Error::from)
                });
                match res {
                    Ok(()) => ControlFlow::Continue(()),
                    Err(e) => {
                        io_error = Some(e);
                        ControlFlow::Break(())
                    }
                }
            })?;
            obs.flush()?;
            if let Some(e) = io_error {
                return Err(e);
            }
            println!("t_final,sup_norm,center_value");
            println!("{},{},{}", state.t, state.sup_norm(), state.center_value());
            Ok(0)
        }
        Command::Threshold { epsilon, amplitude } => {
            let (_, plan) = load_plan(cli)?;
            let plan = SweepPlan { grid: vec![*epsilon], ..plan };
            plan.validate()?;
            let job = plan.job(0);
            let solver = Solver::new(job.solver.clone())?;
            let start = Instant::now();
            let r = bisect_threshold(&solver, &job.spec, amplitude.unwrap_or(job.amplitude), job.epsilon, &job.rule, &job.bisection)?;
            let wall = if cli.no_timing { 0.0 } else { start.elapsed().as_secs_f64() };
            let s = job.spec;
            println!("kind,r,theta,p,epsilon,L_low,L_high,L_star,iterations,wall_seconds");
            println!("{},{},{},{},{},{},{},{},{},{}", s.kind, s.r, s.theta, s.p, job.epsilon, r.l_low, r.l_high, r.l_star, r.iterations, wall);
            Ok(0)
        }
        Command::Sweep => {
            let (text, plan) = load_plan(cli)?;
            plan.validate()?;
            let started = chrono::Utc::now();
            let rows = threshold_lab::run_sweep(&plan).map_err(|e| match e {
                SweepError::Plan(p) => anyhow::Error::from(p),
                other => other.into(),
            })?;
            let failed = write_outputs(cli, "sweep", &text, started, &rows)?;
            Ok(if failed > 0 { EXIT_ROWS } else { 0 })
        }
        Command::Certify {
            which,
            epsilon,
            l,
            theta,
            delta,
            alpha,
            k,
            p,
            r,
            big_k,
            dimension,
        } => {
            let mut out = std::io::stdout().lock();
            match which {
                Certificate::ToyExtinction => {
                    let delta = delta.unwrap_or(0.5 * (1.0 + theta));
                    let c = toy_extinction_certificate(*theta, *epsilon, *l, delta, *dimension)?;
                    writeln!(out, "kind,theta,epsilon,L,delta,N,verdict,lhs,rhs,margin")?;
                    let w = c.witness;
                    writeln!(out, "toy_extinction,{theta},{epsilon},{l},{delta},{dimension},{},{},{},{}", c.verdict.as_str(), w.lhs, w.rhs, c.margin)?;
                }
                Certificate::ToyNonextinction => {
                    let params = NonextinctionParams::new(*theta, *alpha, *k);
                    let c = toy_nonextinction_bound(&params, *epsilon, *l, *dimension)?;
                    writeln!(out, "kind,theta,alpha,alpha_prime,k,epsilon,L,N,verdict,lhs,rhs,margin")?;
                    let w = c.witness;
                    writeln!(
                        out,
                        "toy_nonextinction,{theta},{alpha},{},{k},{epsilon},{l},{dimension},{},{},{},{}",
                        params.alpha_prime,
                        c.verdict.as_str(),
                        w.lhs,
                        w.rhs,
                        c.margin
                    )?;
                }
                Certificate::Monostable => {
                    let spec = NonlinearitySpec::monostable(*r, *p)?;
                    let kk = big_k.unwrap_or(default_monostable_k(&spec));
                    let c = monostable_extinction_certificate(&spec, kk, *epsilon, *l, *dimension)?;
                    writeln!(out, "kind,r,p,K,epsilon,L,N,verdict,lhs,rhs,margin")?;
                    let w = c.witness;
                    writeln!(out, "degenerate_monostable,{r},{p},{kk},{epsilon},{l},{dimension},{},{},{},{}", c.verdict.as_str(), w.lhs, w.rhs, c.margin)?;
                }
            }
            Ok(0)
        }
        Command::Fit {
            input,
            transform,
            x_min,
            x_max,
        } => {
            let records = read_csv(fs::File::open(input).with_context(|| format!("opening {}", input.display()))?)?;
            let points: Vec<(f64, f64)> = records
                .iter()
                .map(|r| (if *transform == Transform::LinearVsLnInvEps { r.epsilon } else { r.theta }, r.l_star))
                .filter(|&(x, _)| x_min.is_none_or(|m| x >= m) && x_max.is_none_or(|m| x <= m))
                .collect();
            let f = threshold_lab::fit(&points, *transform)?;
            println!("transform,slope,intercept,r_squared,n_points");
            println!("{:?},{},{},{},{}", f.transform, f.slope, f.intercept, f.r_squared, f.n_points);
            if let (Transform::LinearVsLnInvEps, Some(first)) = (transform, records.first()) {
                if let Ok(kind) = first.kind.parse() {
                    eprintln!("rescaled slope {:.4}", rescale_factor(kind, first.theta) * f.slope);
                }
            }
            Ok(0)
        }
        Command::Reproduce {
            target,
            theta,
            eps_min,
            eps_max,
            points,
        } => {
            let started = chrono::Utc::now();
            let mut failed = 0;
            match target {
                Target::Table1 | Target::Table2 => {
                    let table = if matches!(target, Target::Table1) { TableId::Table1 } else { TableId::Table2 };
                    let mut opts = TableOptions::new(cli.budget);
                    opts.thetas = theta.clone();
                    opts.window = match (eps_min, eps_max) {
                        (Some(a), Some(b)) => Some((*a, *b)),
                        (None, None) => None,
                        _ => bail!("--eps-min and --eps-max go together"),
                    };
                    opts.points = *points;
                    opts.jobs = cli.jobs;
                    opts.record_timing = !cli.no_timing;
                    let report = reproduce_table_with(table, &opts)?;
                    print!("{}", report.to_text());
                    let rows: Vec<SweepRow> = report.rows.iter().flat_map(|r| r.rows.clone()).collect();
                    let stem = format!("{}_{:?}", if table == TableId::Table1 { "table1" } else { "table2" }, cli.budget).to_lowercase();
                    failed += write_outputs(cli, &stem, &format!("{table:?} {:?} {:?}", cli.budget, report.window), started, &rows)?;
                }
                Target::Theta => {
                    let study = theta_dependence_study(None, None, cli.budget, cli.jobs)?;
                    print!("{}", study.to_text());
                    let text = format!("theta study {:?}", cli.budget);
                    failed += write_outputs(cli, "theta_near_zero", &text, started, &study.near_zero_rows)?;
                    failed += write_outputs(cli, "theta_near_half", &text, started, &study.near_half_rows)?;
                }
            }
            Ok(if failed > 0 { EXIT_ROWS } else { 0 })
        }
        Command::VerifyBounds { epsilon } => {
            let (text, mut plan) = load_plan(cli)?;
            if !epsilon.is_empty() {
                plan.grid = epsilon.clone();
            }
            let started = chrono::Utc::now();
            let report = verify::verify_plan(&plan).map_err(|e| match e {
                SweepError::Plan(p) => anyhow::Error::from(p),
                other => other.into(),
            })?;
            print!("{}", report.to_text());
            write_outputs(cli, "verify_bounds", &text, started, &report.rows)?;
            Ok(if report.all_pass() { 0 } else { EXIT_BOUNDS })
        }
    }
}
