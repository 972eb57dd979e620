//! Extinction/propagation classification and bisection of the critical radius.

use std::collections::HashMap;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::{Kind, NonlinearitySpec};
use crate::solver::{Solver, SolverError};

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("L = {l} is too close to the boundary (limit 0.8 R = {limit})")]
    TooCloseToBoundary { l: f64, limit: f64 },
    #[error("solution reached |x| = 0.9 R (value {value:.3e}) while undecided at L = {l}")]
    BoundaryContamination { l: f64, value: f64 },
    #[error("run at L = {l} still undecided at the maximal horizon T = {horizon}")]
    UndecidedAtHorizon { l: f64, horizon: f64 },
    #[error("verdicts not monotone in L: {extinct_l} extinct but {propagating_l} propagates")]
    MonotonicityViolation { extinct_l: f64, propagating_l: f64 },
    #[error("could not bracket the threshold: {0}")]
    NoBracket(String),
    #[error("invalid classification rule: {0}")]
    InvalidRule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Extinction,
    Propagation,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Extinction => "extinction",
            Verdict::Propagation => "propagation",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Which observation settled a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// `sup u < θ`: heat subsolution from then on.
    BelowThreshold,
    /// Global supersolution `v φ` exists from the current state (monostable).
    DecayCertificate,
    /// `sup u(T) < extinction_level`.
    SupAtHorizon,
    /// Energy became negative.
    NegativeEnergy,
    /// `u(T, 0) > propagation_level`.
    CenterAtHorizon,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRule {
    pub extinction_level: f64,
    /// Fraction of the upper equilibrium 1.
    pub propagation_level: f64,
    pub horizon: f64,
    /// Undecided runs are repeated with a doubled horizon up to this value.
    pub max_horizon: f64,
    pub early_exit: bool,
    pub energy_shortcut: bool,
    /// Time between observations.
    pub check_interval: f64,
}

impl Default for ClassificationRule {
    fn default() -> Self {
        Self {
            extinction_level: 1e-3,
            propagation_level: 0.99,
            horizon: 100.0,
            max_horizon: 400.0,
            early_exit: true,
            energy_shortcut: true,
            check_interval: 0.5,
        }
    }
}

impl ClassificationRule {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self.max_horizon = self.max_horizon.max(horizon);
        self
    }

    pub fn validate(&self, spec: &NonlinearitySpec) -> Result<(), ThresholdError> {
        let lo = self.extinction_level;
        let hi = self.propagation_level;
        let ok = match spec.threshold() {
            Some(th) => 0.0 < lo && lo < th && th < hi && hi < 1.0,
            None => 0.0 < lo && lo < hi && hi < 1.0,
        };
        if !ok {
            return Err(ThresholdError::InvalidRule(format!(
                "need 0 < extinction_level < theta < propagation_level < 1, got {lo} and {hi}"
            )));
        }
        if !(self.horizon > 0.0) || !(self.check_interval > 0.0) {
            return Err(ThresholdError::InvalidRule("horizon and check_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
    /// Time at which the run was settled (or stopped).
    pub t: f64,
    /// Value of the decisive observable.
    pub observable: f64,
}

/// `∫₀^∞ min(M, m (4πs)^{-N/2})^q ds` for `q N / 2 > 1`.
fn envelope_integral(sup: f64, mass: f64, n: usize, q: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    let four_pi = 4.0 * std::f64::consts::PI;
    // crossover where m (4π s)^{-N/2} = M
    let s_star = (mass / sup).powf(1.0 / half_n) / four_pi;
    let head = sup.powf(q) * s_star;
    let tail = mass.powf(q) * four_pi.powf(-half_n * q) * s_star.powf(1.0 - half_n * q) / (half_n * q - 1.0);
    head + tail
}

/// Whether `φ' = K ‖v‖^{p-1} φ^p` started from the state stays bounded,
/// `v` being the heat flow of `u₊`; returns the left-hand side of `(p-1) K ∫ ‖v‖^{p-1} < 1`.
pub fn decay_certificate_margin(spec: &NonlinearitySpec, sup: f64, mass: f64, dimension: usize) -> Option<f64> {
    if spec.kind != Kind::DegenerateMonostable {
        return None;
    }
    let q = spec.p - 1.0;
    if q * dimension as f64 / 2.0 <= 1.0 || !(sup > 0.0) || !(mass > 0.0) {
        return None;
    }
    Some(q * spec.r * envelope_integral(sup, mass, dimension, q))
}

/// Sharper form of [`decay_certificate_margin`] for a state that is radially
/// nonincreasing: `‖v(s)‖` is bounded by the heat kernel at the center applied
/// to the mass of radial bins placed at their inner radius. Returns `None`
/// when the profile is not monotone or the kind has no certificate.
pub fn profile_certificate_margin(spec: &NonlinearitySpec, st: &crate::solver::FieldState) -> Option<f64> {
    const BINS: usize = 256;
    let g = &st.grid;
    let n = g.dimension;
    let q = spec.p - 1.0;
    if spec.kind != Kind::DegenerateMonostable || q * n as f64 / 2.0 <= 1.0 {
        return None;
    }
    let mut pts: Vec<(f64, f64, f64)> = (0..g.len())
        .map(|i| (g.radius(i), st.values[i].max(0.0), g.weights[i]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (sup, mass) = positive_part(st);
    if !(sup > 0.0) {
        return None;
    }
    let tol = 1e-12 * sup;
    let mut prev = f64::INFINITY;
    let mut reach = 0.0f64;
    for &(r, u, _) in &pts {
        if u > prev + tol {
            return None;
        }
        prev = prev.min(u);
        if u > 0.0 {
            reach = r;
        }
    }
    let width = (reach / BINS as f64).max(f64::MIN_POSITIVE);
    let mut bins = vec![(f64::INFINITY, 0.0f64); BINS + 1];
    for &(r, u, w) in &pts {
        if u > 0.0 {
            let b = ((r / width) as usize).min(BINS);
            bins[b].0 = bins[b].0.min(r);
            bins[b].1 += w * u;
        }
    }
    bins.retain(|b| b.1 > 0.0);
    let half_n = n as f64 / 2.0;
    let four_pi = 4.0 * std::f64::consts::PI;
    let center = |s: f64| {
        let norm = (four_pi * s).powf(-half_n);
        bins.iter().map(|&(r, m)| m * (-r * r / (4.0 * s)).exp()).sum::<f64>() * norm
    };
    let s_star = (mass / sup).powf(1.0 / half_n) / four_pi;
    let (s0, s1) = (1e-3 * s_star, 1e6 * s_star);
    let head = sup.powf(q) * s0;
    let tail = mass.powf(q) * four_pi.powf(-half_n * q) * s1.powf(1.0 - half_n * q) / (half_n * q - 1.0);
    let body = crate::special::integrate(
        |y| {
            let s = y.exp();
            sup.min(center(s)).powf(q) * s
        },
        s0.ln(),
        s1.ln(),
        1e-6,
        0.0,
    )
    .ok()?;
    Some(q * spec.r * (head + body + tail))
}

/// Runs one simulation from `amplitude · 1_{B_L}` and classifies its fate.
/// An undecided run with mass near `|x| = 0.9 R` is reported as
/// [`ThresholdError::BoundaryContamination`].
pub fn classify(
    solver: &Solver,
    spec: &NonlinearitySpec,
    amplitude: f64,
    l: f64,
    rule: &ClassificationRule,
) -> Result<Classification, ThresholdError> {
    let (c, probe) = classify_probe(solver, spec, amplitude, l, rule)?;
    if c.verdict == Verdict::Undecided && probe > CONTAMINATION_LEVEL {
        return Err(ThresholdError::BoundaryContamination { l, value: probe });
    }
    Ok(c)
}

const CONTAMINATION_LEVEL: f64 = 1e-6;

/// [`classify`] plus `|u(T, 0.9 R)|`.
fn classify_probe(
    solver: &Solver,
    spec: &NonlinearitySpec,
    amplitude: f64,
    l: f64,
    rule: &ClassificationRule,
) -> Result<(Classification, f64), ThresholdError> {
    let r = solver.config().domain_half_width;
    if l >= 0.8 * r {
        return Err(ThresholdError::TooCloseToBoundary { l, limit: 0.8 * r });
    }
    let mut state = solver.initial_indicator(amplitude, l)?;
    let grid = std::sync::Arc::clone(solver.grid());
    let dimension = grid.dimension;
    let threshold = spec.threshold().filter(|_| spec.kind != Kind::ToyAffine);
    let horizon = rule.horizon;
    let mut next_sharp = 0.0;
    let mut result = Classification {
        verdict: Verdict::Undecided,
        evidence: Evidence::None,
        t: horizon,
        observable: f64::NAN,
    };
    solver.evolve(&mut state, spec, horizon, rule.check_interval, |st, obs| {
        let at_end = st.t >= horizon - 1e-9;
        if rule.early_exit && st.t > 0.0 {
            if let Some(th) = threshold {
                if obs.sup_norm < th {
                    result = Classification {
                        verdict: Verdict::Extinction,
                        evidence: Evidence::BelowThreshold,
                        t: st.t,
                        observable: obs.sup_norm,
                    };
                    return ControlFlow::Break(());
                }
            }
            if spec.kind == Kind::DegenerateMonostable {
                let (sup, mass) = positive_part(st);
                let mut margin = decay_certificate_margin(spec, sup, mass, dimension);
                if let Some(m) = margin {
                    if (1.0..2.5).contains(&m) && st.t >= next_sharp {
                        next_sharp = 1.15 * st.t;
                        margin = profile_certificate_margin(spec, st).map(|s| s.min(m)).or(margin);
                    }
                }
                if let Some(m) = margin {
                    if m < 1.0 {
                        result = Classification {
                            verdict: Verdict::Extinction,
                            evidence: Evidence::DecayCertificate,
                            t: st.t,
                            observable: m,
                        };
                        return ControlFlow::Break(());
                    }
                }
            }
        }
        if rule.energy_shortcut && st.t > 0.0 && obs.energy < 0.0 {
            result = Classification {
                verdict: Verdict::Propagation,
                evidence: Evidence::NegativeEnergy,
                t: st.t,
                observable: obs.energy,
            };
            return ControlFlow::Break(());
        }
        if at_end {
            result.t = st.t;
            if obs.sup_norm < rule.extinction_level {
                result.verdict = Verdict::Extinction;
                result.evidence = Evidence::SupAtHorizon;
                result.observable = obs.sup_norm;
            } else if obs.center_value > rule.propagation_level {
                result.verdict = Verdict::Propagation;
                result.evidence = Evidence::CenterAtHorizon;
                result.observable = obs.center_value;
            } else {
                result.observable = obs.sup_norm;
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok((result, state.value_at(0.9 * r).abs()))
}

fn positive_part(st: &crate::solver::FieldState) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut mass = 0.0;
    for (u, w) in st.values.iter().zip(&st.grid.weights) {
        let p = u.max(0.0);
        sup = sup.max(p);
        mass += w * p;
    }
    (sup, mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub l: f64,
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub observable: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub epsilon: f64,
    pub amplitude: f64,
    pub l_low: f64,
    pub l_high: f64,
    pub l_star: f64,
    pub iterations: usize,
    /// Solver runs actually performed; bisection steps that land on an
    /// already simulated node set reuse the earlier verdict.
    pub simulations: usize,
    /// Largest horizon used.
    pub horizon: f64,
    /// Smallest and largest `L` left undecided at the maximal horizon, when
    /// [`BisectionOptions::undecided_band`] is set.
    pub band: Option<(f64, f64)>,
    pub trace: Vec<TraceEntry>,
}

impl ThresholdResult {
    /// Checks bracket consistency of the trace.
    pub fn check_consistency(&self) -> Result<(), ThresholdError> {
        check_monotone(&self.trace)?;
        for e in &self.trace {
            let bad = (e.l <= self.l_low && e.verdict == Verdict::Propagation)
                || (e.l >= self.l_high && e.verdict == Verdict::Extinction);
            if bad {
                return Err(ThresholdError::MonotonicityViolation {
                    extinct_l: self.l_low,
                    propagating_l: self.l_high,
                });
            }
        }
        Ok(())
    }
}

fn check_monotone(trace: &[TraceEntry]) -> Result<(), ThresholdError> {
    let edge = |v: Verdict, pick: fn(f64, f64) -> f64, init: f64| {
        trace.iter().filter(|e| e.verdict == v).map(|e| e.l).fold(init, pick)
    };
    let max_extinct = edge(Verdict::Extinction, f64::max, f64::NEG_INFINITY);
    let min_prop = edge(Verdict::Propagation, f64::min, f64::INFINITY);
    let min_band = edge(Verdict::Undecided, f64::min, f64::INFINITY);
    let max_band = edge(Verdict::Undecided, f64::max, f64::NEG_INFINITY);
    if max_extinct >= min_prop.min(min_band) || max_band >= min_prop {
        return Err(ThresholdError::MonotonicityViolation {
            extinct_l: max_extinct.max(max_band),
            propagating_l: min_prop.min(min_band),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    /// Target bracket width.
    pub resolution: f64,
    /// Starting bracket; verified and expanded if wrong.
    pub hint: Option<(f64, f64)>,
    pub max_expansions: usize,
    /// Keep runs undecided at the maximal horizon as a band between the
    /// extinct and propagating regions instead of failing; both edges are
    /// then bisected and `L*` is the midpoint of the outer edges.
    pub undecided_band: bool,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            resolution: 0.01,
            hint: None,
            max_expansions: 12,
            undecided_band: false,
        }
    }
}

/// Seed bracket `(C⁻ ln 1/ε, C⁺ ln 1/ε)` when the envelope rates apply.
pub fn seed_bracket(spec: &NonlinearitySpec, epsilon: f64) -> Option<(f64, f64)> {
    let sc = spec.structure_constants().ok()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return None;
    }
    let (cm, cp) = sc.threshold_bounds();
    let ln = (1.0 / epsilon).ln();
    Some((cm * ln, cp * ln))
}

struct Bisector<'a> {
    solver: &'a Solver,
    spec: &'a NonlinearitySpec,
    amplitude: f64,
    rule: ClassificationRule,
    cache: HashMap<usize, (Verdict, Evidence, f64)>,
    trace: Vec<TraceEntry>,
    simulations: usize,
}

impl Bisector<'_> {
    /// Number of nodes inside `|x| < L`; runs with the same count are identical.
    fn footprint(&self, l: f64) -> usize {
        let g = self.solver.grid();
        (0..g.len()).filter(|&i| g.radius(i) < l).count()
    }

    fn verdict(&mut self, l: f64, allow_undecided: bool) -> Result<Verdict, ThresholdError> {
        let key = self.footprint(l);
        let (verdict, evidence, observable) = match self.cache.get(&key) {
            Some(hit) => *hit,
            None => {
                let c = loop {
                    let (c, probe) = classify_probe(self.solver, self.spec, self.amplitude, l, &self.rule)?;
                    self.simulations += 1;
                    if c.verdict != Verdict::Undecided {
                        break c;
                    }
                    if self.rule.horizon >= self.rule.max_horizon {
                        if probe > CONTAMINATION_LEVEL {
                            return Err(ThresholdError::BoundaryContamination { l, value: probe });
                        }
                        if allow_undecided {
                            break c;
                        }
                        return Err(ThresholdError::UndecidedAtHorizon { l, horizon: self.rule.horizon });
                    }
                    self.rule.horizon = (2.0 * self.rule.horizon).min(self.rule.max_horizon);
                };
                self.cache.insert(key, (c.verdict, c.evidence, c.observable));
                (c.verdict, c.evidence, c.observable)
            }
        };
        self.trace.push(TraceEntry {
            l,
            verdict,
            evidence,
            observable,
            horizon: self.rule.horizon,
        });
        check_monotone(&self.trace)?;
        Ok(verdict)
    }
}

/// Brackets the critical radius `L*` for initial data `amplitude · 1_{B_L}`.
pub fn bisect_threshold(
    solver: &Solver,
    spec: &NonlinearitySpec,
    amplitude: f64,
    epsilon: f64,
    rule: &ClassificationRule,
    options: &BisectionOptions,
) -> Result<ThresholdResult, ThresholdError> {
    rule.validate(spec)?;
    if !(options.resolution > 0.0) {
        return Err(ThresholdError::InvalidRule("resolution must be positive".into()));
    }
    let r = solver.config().domain_half_width;
    let l_max = 0.8 * r * (1.0 - 1e-9);
    let l_min = 0.5 * solver.config().dx;
    let mut b = Bisector {
        solver,
        spec,
        amplitude,
        rule: rule.clone(),
        cache: HashMap::new(),
        trace: Vec::new(),
        simulations: 0,
    };

    let (mut lo, mut hi) = options
        .hint
        .or_else(|| seed_bracket(spec, epsilon))
        .unwrap_or((l_min.max(0.01 * r), 0.5 * r));
    lo = lo.clamp(l_min, l_max);
    hi = hi.clamp(lo, l_max);
    // undecided band [band_lo, band_hi], empty while band_lo > band_hi
    let (mut band_lo, mut band_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let note = |l: f64, v: Verdict, band_lo: &mut f64, band_hi: &mut f64| {
        if v == Verdict::Undecided {
            *band_lo = band_lo.min(l);
            *band_hi = band_hi.max(l);
        }
    };

    let mut expansions = 0;
    let mut top = None;
    loop {
        let v = b.verdict(lo, options.undecided_band)?;
        note(lo, v, &mut band_lo, &mut band_hi);
        if v == Verdict::Extinction {
            break;
        }
        if v == Verdict::Propagation {
            top = Some(lo);
        }
        if lo <= l_min || expansions >= options.max_expansions {
            return Err(ThresholdError::NoBracket(format!("no extinction down to L = {lo}")));
        }
        lo = (0.5 * lo).max(l_min);
        expansions += 1;
    }
    hi = match top {
        Some(t) => t,
        None if hi <= lo => (2.0 * lo).min(l_max),
        None => hi,
    };
    let mut expansions = 0;
    if top.is_none() {
        loop {
            let v = b.verdict(hi, options.undecided_band)?;
            note(hi, v, &mut band_lo, &mut band_hi);
            if v == Verdict::Propagation {
                break;
            }
            if v == Verdict::Extinction {
                lo = hi;
            }
            if hi >= l_max || expansions >= options.max_expansions {
                return Err(ThresholdError::NoBracket(format!("no propagation up to L = {hi}")));
            }
            hi = (2.0 * hi).min(l_max);
            expansions += 1;
        }
    }

    let mut iterations = 0;
    loop {
        // gaps between the extinct edge, the band and the propagating edge
        let (gap_lo, gap_hi) = if band_lo <= band_hi { ((lo, band_lo), (band_hi, hi)) } else { ((lo, hi), (hi, hi)) };
        let (a, z) = if gap_lo.1 - gap_lo.0 >= gap_hi.1 - gap_hi.0 { gap_lo } else { gap_hi };
        if z - a <= options.resolution {
            break;
        }
        let mid = 0.5 * (a + z);
        let v = b.verdict(mid, options.undecided_band)?;
        match v {
            Verdict::Extinction => lo = mid,
            Verdict::Propagation => hi = mid,
            Verdict::Undecided => note(mid, v, &mut band_lo, &mut band_hi),
        }
        iterations += 1;
    }

    let result = ThresholdResult {
        epsilon,
        amplitude,
        l_low: lo,
        l_high: hi,
        l_star: 0.5 * (lo + hi),
        iterations,
        simulations: b.simulations,
        horizon: b.rule.horizon,
        band: (band_lo <= band_hi).then_some((band_lo, band_hi)),
        trace: b.trace,
    };
    result.check_consistency()?;
    Ok(result)
}
