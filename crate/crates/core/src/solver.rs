//! Operator-splitting finite-difference solver for `u_t = Δu + f(u)`.
//!
//! Diffusion is advanced with Crank-Nicolson on a uniform grid, either the
//! Cartesian line `[-R, R]` or the radial half-line `[0, R]` with the
//! Laplacian `u_rr + (N-1)/r u_r`. The reaction substep is applied nodewise
//! through [`NonlinearitySpec::flow`].

use std::io::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::{NonlinearitySpec, ReactionMode};
use crate::tridiag::{ThomasFactor, Tridiagonal};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("support radius L = {l} must be below the domain half-width R = {r}")]
    LOutOfDomain { l: f64, r: f64 },
    #[error("Crank-Nicolson system is singular")]
    SingularSystem,
    #[error("non-finite value in the solution at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("final time {t_final} precedes current time {t}")]
    TimeReversed { t: f64, t_final: f64 },
    #[error("snapshot I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletZero,
    #[default]
    NeumannZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Diffusion over `dt`, then reaction over `dt`.
    #[default]
    Lie,
    /// Reaction `dt/2`, diffusion `dt`, reaction `dt/2`.
    Strang,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// 1 is the Cartesian line; 2 and above use the radial reduction.
    pub dimension: usize,
    pub domain_half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub splitting: Splitting,
    #[serde(default)]
    pub reaction_mode: ReactionMode,
}

impl Default for SolverConfig {
    /// `dx = dt = 0.02` on `[-100, 100]` up to `T = 100`.
    fn default() -> Self {
        Self {
            dimension: 1,
            domain_half_width: 100.0,
            dx: 0.02,
            dt: 0.02,
            t_final: 100.0,
            boundary: Boundary::NeumannZero,
            splitting: Splitting::Lie,
            reaction_mode: ReactionMode::ExactWherePossible,
        }
    }
}

impl SolverConfig {
    pub fn with_grid(mut self, half_width: f64, dx: f64, dt: f64) -> Self {
        self.domain_half_width = half_width;
        self.dx = dx;
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        for (name, v) in [
            ("domain_half_width", self.domain_half_width),
            ("dx", self.dx),
            ("dt", self.dt),
            ("t_final", self.t_final),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let span = if self.dimension == 1 {
            2.0 * self.domain_half_width
        } else {
            self.domain_half_width
        };
        let cells = span / self.dx;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) || cells.round() < 4.0 {
            return bad(format!("dx = {} does not divide the domain length {span}", self.dx));
        }
        if self.dt > self.dx * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds dx = {}", self.dt, self.dx));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        let span = if self.dimension == 1 {
            2.0 * self.domain_half_width
        } else {
            self.domain_half_width
        };
        (span / self.dx).round() as usize + 1
    }
}

/// Node positions plus quadrature weights for integrals over `ℝ^N`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dimension: usize,
    pub boundary: Boundary,
    pub dx: f64,
    /// `x_i` (Cartesian) or `r_i` (radial).
    pub nodes: Vec<f64>,
    /// Trapezoid weights on the line; control-volume measures `|S^{N-1}| ∫ r^{N-1} dr` in the radial case.
    pub weights: Vec<f64>,
    pub center: usize,
}

impl Grid {
    pub fn new(config: &SolverConfig) -> Self {
        let n = config.node_count();
        let dx = config.dx;
        let radial = config.dimension > 1;
        let nodes: Vec<f64> = if radial {
            (0..n).map(|i| i as f64 * dx).collect()
        } else {
            let half = (n - 1) / 2;
            (0..n).map(|i| (i as f64 - half as f64) * dx).collect()
        };
        let sphere = unit_sphere_area(config.dimension);
        let weights = (0..n)
            .map(|i| {
                if radial {
                    let (lo, hi) = radial_cell(&nodes, i, dx);
                    let nd = config.dimension as i32;
                    sphere * (hi.powi(nd) - lo.powi(nd)) / nd as f64
                } else {
                    let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    end * dx
                }
            })
            .collect();
        Self {
            dimension: config.dimension,
            boundary: config.boundary,
            dx,
            center: if radial { 0 } else { (n - 1) / 2 },
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_radial(&self) -> bool {
        self.dimension > 1
    }

    /// Distance of each node from the origin.
    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        self.nodes[i].abs()
    }

    /// Discrete Laplacian with the configured boundary rows.
    pub fn laplacian(&self) -> Tridiagonal {
        let n = self.len();
        let h2 = self.dx * self.dx;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            if self.is_radial() {
                // finite volumes [r_i - dx/2, r_i + dx/2] ∩ [0, R] with face area r^{N-1}
                let nd = self.dimension as i32;
                let (lo, hi) = radial_cell(&self.nodes, i, self.dx);
                let volume = (hi.powi(nd) - lo.powi(nd)) / nd as f64;
                let flux = |r: f64| r.powi(nd - 1) / (self.dx * volume);
                if i > 0 {
                    lower[i] = flux(lo);
                }
                if i < n - 1 {
                    upper[i] = flux(hi);
                }
                diag[i] = -(lower[i] + upper[i]);
            } else if i == 0 {
                diag[0] = -2.0 / h2;
                upper[0] = 2.0 / h2;
            } else if i == n - 1 {
                lower[i] = 2.0 / h2;
                diag[i] = -2.0 / h2;
            } else {
                lower[i] = 1.0 / h2;
                diag[i] = -2.0 / h2;
                upper[i] = 1.0 / h2;
            }
        }
        if self.boundary == Boundary::DirichletZero {
            let last = n - 1;
            lower[last] = 0.0;
            diag[last] = 0.0;
            if !self.is_radial() {
                upper[0] = 0.0;
                diag[0] = 0.0;
            }
        }
        Tridiagonal { lower, diag, upper }
    }

    /// Indices pinned to zero by a Dirichlet boundary.
    fn pinned(&self) -> impl Iterator<Item = usize> {
        let n = self.len();
        let pins: Vec<usize> = match (self.boundary, self.is_radial()) {
            (Boundary::NeumannZero, _) => vec![],
            (Boundary::DirichletZero, true) => vec![n - 1],
            (Boundary::DirichletZero, false) => vec![0, n - 1],
        };
        pins.into_iter()
    }
}

fn radial_cell(nodes: &[f64], i: usize, dx: f64) -> (f64, f64) {
    let last = nodes.len() - 1;
    let lo = if i == 0 { 0.0 } else { nodes[i] - 0.5 * dx };
    let hi = if i == last { nodes[i] } else { nodes[i] + 0.5 * dx };
    (lo, hi)
}

/// Area of the unit sphere `S^{N-1}`; 2 for `N = 1` (the two endpoints).
pub fn unit_sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Prefactored `(I - dt/2 A) u_new = (I + dt/2 A) u_old`.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    explicit: Tridiagonal,
    implicit: ThomasFactor,
    pinned: Vec<usize>,
    dt: f64,
}

impl CrankNicolson {
    pub fn new(grid: &Grid, dt: f64) -> Result<Self, SolverError> {
        let a = grid.laplacian();
        let half = 0.5 * dt;
        let n = a.len();
        let scale = |m: &Tridiagonal, sign: f64| Tridiagonal {
            lower: m.lower.iter().map(|v| sign * half * v).collect(),
            diag: m.diag.iter().map(|v| 1.0 + sign * half * v).collect(),
            upper: m.upper.iter().map(|v| sign * half * v).collect(),
        };
        let explicit = scale(&a, 1.0);
        let implicit = ThomasFactor::new(&scale(&a, -1.0)).ok_or(SolverError::SingularSystem)?;
        debug_assert_eq!(implicit.len(), n);
        Ok(Self {
            explicit,
            implicit,
            pinned: grid.pinned().collect(),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step in place; `scratch` must have the grid length.
    pub fn apply(&self, values: &mut [f64], scratch: &mut [f64]) {
        self.explicit.mul_vec(values, scratch);
        for &i in &self.pinned {
            scratch[i] = 0.0;
        }
        self.implicit.solve_in_place(scratch);
        values.copy_from_slice(scratch);
    }
}

/// Discrete solution at one time instant.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<f64>,
    pub grid: Arc<Grid>,
}

impl FieldState {
    pub fn center_value(&self) -> f64 {
        self.values[self.grid.center]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `u` at the node nearest to `x` (radius for radial grids).
    pub fn value_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        let origin = g.nodes[0];
        let idx = ((x - origin) / g.dx).round().clamp(0.0, (g.len() - 1) as f64) as usize;
        self.values[idx]
    }

    /// Minimum over nodes with `|x| <= radius`.
    pub fn min_within(&self, radius: f64) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .filter(|&i| g.radius(i) <= radius + 1e-12)
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `x,u` rows to `{dir}/{run_id}_t{time}.csv`.
    pub fn write_snapshot(&self, dir: &Path, run_id: &str) -> Result<PathBuf, SolverError> {
        let path = dir.join(format!("{run_id}_t{:.4}.csv", self.t));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(out, "x,u")?;
        for (x, u) in self.grid.nodes.iter().zip(&self.values) {
            writeln!(out, "{x},{u}")?;
        }
        out.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub sup_norm: f64,
    pub center_value: f64,
    pub energy: f64,
    pub mass: f64,
}

/// Sup norm, center value, energy `∫ ½|∇u|² + F(u)` and mass `∫ u`.
///
/// The gradient term uses edge differences `(u_{i+1} - u_i)/dx`, weighted by
/// the sphere measure at the edge midpoint in the radial case.
pub fn observables(state: &FieldState, spec: &NonlinearitySpec) -> Observables {
    let g = &state.grid;
    let u = &state.values;
    let mut mass = 0.0;
    let mut potential = 0.0;
    for (i, &w) in g.weights.iter().enumerate() {
        mass += w * u[i];
        potential += w * spec.potential(u[i]);
    }
    let mut gradient = 0.0;
    let sphere = if g.is_radial() { unit_sphere_area(g.dimension) } else { 1.0 };
    for i in 0..g.len() - 1 {
        let d = (u[i + 1] - u[i]) / g.dx;
        let measure = if g.is_radial() {
            sphere * (g.nodes[i] + 0.5 * g.dx).powi(g.dimension as i32 - 1)
        } else {
            1.0
        };
        gradient += 0.5 * d * d * measure * g.dx;
    }
    Observables {
        t: state.t,
        sup_norm: state.sup_norm(),
        center_value: state.center_value(),
        energy: gradient + potential,
        mass,
    }
}

/// Summary of an [`Solver::evolve`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveSummary {
    pub steps: usize,
    pub stopped_early: bool,
    /// Largest clamp applied to an RK2 reaction substep.
    pub max_clamp: f64,
}

pub struct Solver {
    config: SolverConfig,
    grid: Arc<Grid>,
    diffusion: CrankNicolson,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = Arc::new(Grid::new(&config));
        let diffusion = CrankNicolson::new(&grid, config.dt)?;
        Ok(Self {
            config,
            grid,
            diffusion,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn from_fn(&self, f: impl Fn(f64) -> f64) -> FieldState {
        FieldState {
            t: 0.0,
            values: self.grid.nodes.iter().map(|&x| f(x)).collect(),
            grid: Arc::clone(&self.grid),
        }
    }

    /// `amplitude · 1_{|x| < L}` with no smoothing of the jump.
    pub fn initial_indicator(&self, amplitude: f64, l: f64) -> Result<FieldState, SolverError> {
        let r = self.config.domain_half_width;
        if !(l > 0.0) || l >= r {
            return Err(SolverError::LOutOfDomain { l, r });
        }
        Ok(self.from_fn(|x| if x.abs() < l { amplitude } else { 0.0 }))
    }

    pub fn diffusion_step(&self, state: &mut FieldState, scratch: &mut [f64]) {
        self.diffusion.apply(&mut state.values, scratch);
    }

    /// Nodewise reaction flow over `dt`; returns the largest RK2 clamp.
    pub fn reaction_step(&self, state: &mut FieldState, spec: &NonlinearitySpec, dt: f64) -> f64 {
        reaction_in_place(&mut state.values, spec, dt, self.config.reaction_mode)
    }

    /// One full splitting step of length `dt` using `diffusion`.
    fn split_step(
        &self,
        diffusion: &CrankNicolson,
        state: &mut FieldState,
        spec: &NonlinearitySpec,
        scratch: &mut [f64],
    ) -> f64 {
        let dt = diffusion.dt();
        let mode = self.config.reaction_mode;
        match self.config.splitting {
            Splitting::Lie => {
                diffusion.apply(&mut state.values, scratch);
                reaction_in_place(&mut state.values, spec, dt, mode)
            }
            Splitting::Strang => {
                let a = reaction_in_place(&mut state.values, spec, 0.5 * dt, mode);
                diffusion.apply(&mut state.values, scratch);
                let b = reaction_in_place(&mut state.values, spec, 0.5 * dt, mode);
                a.max(b)
            }
        }
    }

    /// Advances `state` to `t_final`, calling `observer` at `t0`, every
    /// `stride` time units and at the final time. The observer may stop the
    /// run by returning `ControlFlow::Break`.
    pub fn evolve<F>(
        &self,
        state: &mut FieldState,
        spec: &NonlinearitySpec,
        t_final: f64,
        stride: f64,
        mut observer: F,
    ) -> Result<EvolveSummary, SolverError>
    where
        F: FnMut(&FieldState, &Observables) -> ControlFlow<()>,
    {
        if t_final < state.t {
            return Err(SolverError::TimeReversed {
                t: state.t,
                t_final,
            });
        }
        let dt = self.config.dt;
        let t0 = state.t;
        let span = (t_final - t0) / dt;
        let mut full_steps = span.floor() as usize;
        let mut remainder = t_final - t0 - full_steps as f64 * dt;
        if remainder < 1e-9 * dt {
            remainder = 0.0;
        } else if dt - remainder < 1e-9 * dt {
            full_steps += 1;
            remainder = 0.0;
        }
        let every = ((stride / dt).round() as usize).max(1);
        let mut scratch = vec![0.0; self.grid.len()];
        let mut summary = EvolveSummary {
            steps: 0,
            stopped_early: false,
            max_clamp: 0.0,
        };

        if observer(state, &observables(state, spec)).is_break() {
            summary.stopped_early = true;
            return Ok(summary);
        }
        for k in 1..=full_steps {
            let clamp = self.split_step(&self.diffusion, state, spec, &mut scratch);
            summary.max_clamp = summary.max_clamp.max(clamp);
            summary.steps = k;
            state.t = t0 + k as f64 * dt;
            if !clamp.is_finite() || (k % every == 0 && state.values.iter().any(|v| !v.is_finite())) {
                return Err(SolverError::NonFiniteState { t: state.t });
            }
            let last = k == full_steps && remainder == 0.0;
            if (k % every == 0 || last) && observer(state, &observables(state, spec)).is_break() {
                summary.stopped_early = true;
                return Ok(summary);
            }
        }
        if remainder > 0.0 {
            let partial = CrankNicolson::new(&self.grid, remainder)?;
            let clamp = self.split_step(&partial, state, spec, &mut scratch);
            summary.max_clamp = summary.max_clamp.max(clamp);
            summary.steps += 1;
            state.t = t_final;
            if observer(state, &observables(state, spec)).is_break() {
                summary.stopped_early = true;
            }
        }
        if state.values.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteState { t: state.t });
        }
        Ok(summary)
    }

    /// [`Solver::evolve`] without an observer.
    pub fn run(
        &self,
        state: &mut FieldState,
        spec: &NonlinearitySpec,
        t_final: f64,
    ) -> Result<EvolveSummary, SolverError> {
        self.evolve(state, spec, t_final, f64::INFINITY, |_, _| ControlFlow::Continue(()))
    }
}

fn reaction_in_place(values: &mut [f64], spec: &NonlinearitySpec, dt: f64, mode: ReactionMode) -> f64 {
    if spec.r == 0.0 {
        return 0.0;
    }
    let mut clamp = 0.0f64;
    for v in values.iter_mut() {
        let (u, c) = spec.flow(*v, dt, mode);
        *v = u;
        clamp = clamp.max(c);
        if !u.is_finite() {
            clamp = f64::NAN;
        }
    }
    clamp
}
