//! Heat-kernel formulas and executable sub/supersolution certificates.
//!
//! `A_L(t)` is the sup norm at time `t` of the heat flow of `1_{B_L}` in `ℝ^N`,
//! equal to `P(N/2, L²/(4t))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::{Kind, NonlinearityError, NonlinearitySpec};
use crate::special::{erf, gamma, gamma_p, gamma_q, integrate, QuadratureError};
pub use crate::threshold::Verdict;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("parameter out of range: {0}")]
    DomainError(String),
    #[error("p = {p} is not above the Fujita exponent 1 + 2/N = {fujita}")]
    FujitaSubcritical { p: f64, fujita: f64 },
    #[error("ODE solution blows up at tau = {blowup} < {tau}")]
    BlowupTime { tau: f64, blowup: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// Heat flow of `amplitude · 1_{B_L}` in `ℝ^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatIndicatorKernel {
    pub dimension: usize,
    pub l: f64,
    pub amplitude: f64,
}

impl HeatIndicatorKernel {
    pub fn new(dimension: usize, l: f64, amplitude: f64) -> Result<Self, BoundsError> {
        if dimension == 0 || !(l > 0.0) || !amplitude.is_finite() {
            return Err(BoundsError::DomainError(format!("need N >= 1 and L > 0, got N = {dimension}, L = {l}")));
        }
        Ok(Self { dimension, l, amplitude })
    }
}

/// `A_L(t)`.
pub fn indicator_sup(dimension: usize, l: f64, t: f64) -> f64 {
    gamma_p(0.5 * dimension as f64, l * l / (4.0 * t))
}

/// `amplitude · A_L(t)`, the value at the center.
pub fn heat_sup_norm(kernel: &HeatIndicatorKernel, t: f64) -> Result<f64, BoundsError> {
    if !(t > 0.0) {
        return Err(BoundsError::NonPositiveTime(t));
    }
    Ok(kernel.amplitude * indicator_sup(kernel.dimension, kernel.l, t))
}

pub fn heat_profile_1d(kernel: &HeatIndicatorKernel, t: f64, x: f64) -> Result<f64, BoundsError> {
    if !(t > 0.0) {
        return Err(BoundsError::NonPositiveTime(t));
    }
    let s = 2.0 * t.sqrt();
    let l = kernel.l;
    Ok(0.5 * kernel.amplitude * (erf((l - x) / s) + erf((l + x) / s)))
}

/// `T_ε = ln((δ - θ)/ε)`.
pub fn extinction_time(theta: f64, epsilon: f64, delta: f64) -> Result<f64, BoundsError> {
    if !(delta > theta) || !(epsilon > 0.0) || epsilon >= delta - theta {
        return Err(BoundsError::DomainError(format!(
            "need delta > theta and 0 < epsilon < delta - theta, got theta = {theta}, epsilon = {epsilon}, delta = {delta}"
        )));
    }
    Ok(((delta - theta) / epsilon).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// `L / ln(1/ε)` for the ε-dependent certificates, NaN otherwise.
    pub gamma: f64,
    /// Time at which the construction is evaluated; infinite for global ones.
    pub time: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a certificate: `margin > 0` iff the decisive inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub verdict: Verdict,
    pub margin: f64,
    pub witness: Witness,
}

impl CertificateVerdict {
    fn from_inequality(success: Verdict, lhs: f64, rhs: f64, gamma: f64, time: f64) -> Self {
        // inequality is lhs < rhs
        let margin = rhs - lhs;
        Self {
            verdict: if margin > 0.0 { success } else { Verdict::Undecided },
            margin,
            witness: Witness { gamma, time, lhs, rhs },
        }
    }
}

const QUAD_REL: f64 = 1e-10;

/// Extinction for `w_t = Δw + (w - θ)₊` from `(θ + ε) 1_{B_L}`:
/// holds when `1 + ε/θ < ∫₀^{T_ε} e^{-s}/A_L(s) ds + e^{-T_ε}/A_L(T_ε)`.
pub fn toy_extinction_certificate(
    theta: f64,
    epsilon: f64,
    l: f64,
    delta: f64,
    dimension: usize,
) -> Result<CertificateVerdict, BoundsError> {
    if !(theta > 0.0 && theta < 1.0) || !(l > 0.0) || dimension == 0 {
        return Err(BoundsError::DomainError(format!("theta = {theta}, L = {l}, N = {dimension}")));
    }
    let t_eps = extinction_time(theta, epsilon, delta)?;
    let a = |s: f64| if s <= 0.0 { 1.0 } else { indicator_sup(dimension, l, s) };
    let integral = integrate(|s| (-s).exp() / a(s), 0.0, t_eps, QUAD_REL, 0.0)?;
    let rhs = integral + (-t_eps).exp() / a(t_eps);
    let lhs = 1.0 + epsilon / theta;
    let gamma = l / (1.0 / epsilon).ln();
    Ok(CertificateVerdict::from_inequality(Verdict::Extinction, lhs, rhs, gamma, t_eps))
}

/// Parameters of the affine-toy propagation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonextinctionParams {
    pub theta: f64,
    /// Level defining `T_ε = ln((α - θ)/ε)`.
    pub alpha: f64,
    /// Requested level for `min_{|x| ≤ kL} w(T_ε)`.
    pub alpha_prime: f64,
    pub k: f64,
}

impl NonextinctionParams {
    /// `α' = (θ + α)/2`.
    pub fn new(theta: f64, alpha: f64, k: f64) -> Self {
        Self {
            theta,
            alpha,
            alpha_prime: 0.5 * (theta + alpha),
            k,
        }
    }
}

/// Lower bound on `min_{|x| ≤ kL} w(T_ε)` for `w_t = Δw + w - θ` from `(θ + ε) 1_{B_L}`.
pub fn toy_nonextinction_lower_bound(
    params: &NonextinctionParams,
    epsilon: f64,
    l: f64,
    dimension: usize,
) -> Result<(f64, f64), BoundsError> {
    let NonextinctionParams { theta, alpha, k, .. } = *params;
    if !(theta > 0.0 && theta < alpha && alpha < 1.0) || !(k > 0.0 && k < 1.0) || !(l > 0.0) || dimension == 0 {
        return Err(BoundsError::DomainError(format!(
            "need 0 < theta < alpha < 1, 0 < k < 1, L > 0; got theta = {theta}, alpha = {alpha}, k = {k}, L = {l}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < alpha - theta) {
        return Err(BoundsError::DomainError(format!("need 0 < epsilon < alpha - theta, got {epsilon}")));
    }
    let t_eps = ((alpha - theta) / epsilon).ln();
    let n = dimension as f64;
    let reach = (1.0 - k) * l;
    // ∫_{|z| ≥ ρ} e^{-|z|²} dz = π^{N/2} Q(N/2, ρ²)
    let tail = gamma_q(0.5 * n, reach * reach / (4.0 * t_eps));
    let bound = theta + (alpha - theta) * (1.0 - (theta + epsilon) / (epsilon * (1.0 - k).powf(n)) * tail);
    Ok((bound, t_eps))
}

pub fn toy_nonextinction_bound(
    params: &NonextinctionParams,
    epsilon: f64,
    l: f64,
    dimension: usize,
) -> Result<CertificateVerdict, BoundsError> {
    if !(params.alpha_prime > params.theta && params.alpha_prime < params.alpha) {
        return Err(BoundsError::DomainError(format!(
            "need theta < alpha' < alpha, got alpha' = {}",
            params.alpha_prime
        )));
    }
    let (bound, t_eps) = toy_nonextinction_lower_bound(params, epsilon, l, dimension)?;
    let gamma = l / (1.0 / epsilon).ln();
    // certify alpha' < bound
    Ok(CertificateVerdict::from_inequality(Verdict::Propagation, params.alpha_prime, bound, gamma, t_eps))
}

pub fn fujita_exponent(dimension: usize) -> f64 {
    1.0 + 2.0 / dimension as f64
}

/// `∫₀^∞ A_1(t)^q dt` for `q N/2 > 1`, with the neglected tail bounded
/// through `P(a, x) ≤ x^a / Γ(a + 1)`. Returns (value, tail bound).
pub fn indicator_power_integral(dimension: usize, q: f64) -> Result<(f64, f64), BoundsError> {
    let a = 0.5 * dimension as f64;
    if a * q <= 1.0 {
        return Err(BoundsError::FujitaSubcritical {
            p: q + 1.0,
            fujita: fujita_exponent(dimension),
        });
    }
    let c = gamma(a + 1.0).powf(-q);
    // tail over [T, ∞) ≤ c (4T)^{-aq} T / (aq - 1)
    let tail_at = |t: f64| c * (4.0 * t).powf(-a * q) * t / (a * q - 1.0);
    let mut t_cut = 1.0;
    while tail_at(t_cut) > 1e-14 {
        t_cut *= 2.0;
    }
    let f = |t: f64| if t <= 0.0 { 1.0 } else { indicator_sup(dimension, 1.0, t).powf(q) };
    let head = integrate(f, 0.0, 1.0, 1e-12, 0.0)?;
    // log variable on [1, T] where the integrand decays like a power
    let body = integrate(|s| {
        let t = s.exp();
        f(t) * t
    }, 0.0, t_cut.ln(), 1e-12, 0.0)?;
    Ok((head + body, tail_at(t_cut)))
}

/// Default `K` with `f(u) ≤ K u^p` on `[0, 1]` for `r u^p (1 - u)`.
pub fn default_monostable_k(spec: &NonlinearitySpec) -> f64 {
    spec.r
}

/// Checks `f(u) ≤ K u^p` on a dense grid of `(0, 1]`.
pub fn check_monostable_k(spec: &NonlinearitySpec, k: f64) -> bool {
    (1..=4000).all(|i| {
        let u = i as f64 / 4000.0;
        spec.eval(u) <= k * u.powf(spec.p) * (1.0 + 1e-12)
    })
}

/// `C = (p-1) K ∫₀^∞ A_1(t)^{p-1} dt`; the certificate is `C L² ε^{p-1} < 1`.
pub fn monostable_constant(spec: &NonlinearitySpec, k: f64, dimension: usize) -> Result<f64, BoundsError> {
    let q = spec.p - 1.0;
    if spec.p <= fujita_exponent(dimension) {
        return Err(BoundsError::FujitaSubcritical {
            p: spec.p,
            fujita: fujita_exponent(dimension),
        });
    }
    let (value, tail) = indicator_power_integral(dimension, q)?;
    Ok(q * k * (value + tail))
}

/// Global supersolution `v φ` for `u_t = Δu + f(u)` from `ε 1_{B_L}`, which
/// then decays like `t^{-N/2}`.
pub fn monostable_extinction_certificate(
    spec: &NonlinearitySpec,
    k: f64,
    epsilon: f64,
    l: f64,
    dimension: usize,
) -> Result<CertificateVerdict, BoundsError> {
    if spec.kind != Kind::DegenerateMonostable {
        return Err(NonlinearityError::UnsupportedKind(spec.kind).into());
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) || !(l > 0.0) || dimension == 0 {
        return Err(BoundsError::DomainError(format!("epsilon = {epsilon}, L = {l}, N = {dimension}")));
    }
    if !(k > 0.0) || !check_monostable_k(spec, k) {
        return Err(BoundsError::DomainError(format!("f(u) <= K u^p fails for K = {k}")));
    }
    let c = monostable_constant(spec, k, dimension)?;
    let lhs = c * l * l * epsilon.powf(spec.p - 1.0);
    Ok(CertificateVerdict::from_inequality(Verdict::Extinction, lhs, 1.0, f64::NAN, f64::INFINITY))
}

/// Largest `L` certified by [`monostable_extinction_certificate`]: `(C ε^{p-1})^{-1/2}`.
pub fn monostable_extinction_radius(
    spec: &NonlinearitySpec,
    k: f64,
    epsilon: f64,
    dimension: usize,
) -> Result<f64, BoundsError> {
    let c = monostable_constant(spec, k, dimension)?;
    Ok(1.0 / (c * epsilon.powf(spec.p - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationScaleOptions {
    /// Multiplies the smallest admissible γ.
    pub safety: f64,
    pub k: f64,
}

impl Default for PropagationScaleOptions {
    fn default() -> Self {
        Self { safety: 1.1, k: 0.05 }
    }
}

/// `L_ε = γ √(T_ε ln(1/ε))` with `T_ε = (ε^{1-p} - δ^{1-p})/(p-1)` and
/// `γ (1-k)/2 > √(p-1)`, scaled back from unit rate using `f ≥ r(1-δ) u^p` on `[0, δ]`.
pub fn monostable_propagation_scale(
    spec: &NonlinearitySpec,
    delta: f64,
    epsilon: f64,
    options: &PropagationScaleOptions,
) -> Result<f64, BoundsError> {
    if spec.kind != Kind::DegenerateMonostable {
        return Err(NonlinearityError::UnsupportedKind(spec.kind).into());
    }
    if !(epsilon > 0.0 && epsilon < delta && delta < 1.0) {
        return Err(BoundsError::DomainError(format!(
            "need 0 < epsilon < delta < 1, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    if !(options.safety > 1.0) || !(options.k > 0.0 && options.k < 1.0) {
        return Err(BoundsError::DomainError("need safety > 1 and 0 < k < 1".into()));
    }
    let q = spec.p - 1.0;
    let t_eps = (epsilon.powf(-q) - delta.powf(-q)) / q;
    let gamma = options.safety * 2.0 * q.sqrt() / (1.0 - options.k);
    let rate = spec.r * (1.0 - delta);
    Ok(gamma * (t_eps * (1.0 / epsilon).ln()).sqrt() / rate.sqrt())
}

/// Solution of `Y_τ = (Y)₊^p`, `Y(0) = ξ`.
pub fn y_flow(tau: f64, xi: f64, p: f64) -> Result<f64, BoundsError> {
    if !(tau >= 0.0) || !(p > 1.0) {
        return Err(BoundsError::DomainError(format!("tau = {tau}, p = {p}")));
    }
    if xi <= 0.0 || tau == 0.0 {
        return Ok(xi);
    }
    let q = p - 1.0;
    let blowup = 1.0 / (q * xi.powf(q));
    if tau >= blowup {
        return Err(BoundsError::BlowupTime { tau, blowup });
    }
    Ok((xi.powf(-q) - q * tau).powf(-1.0 / q))
}

/// `(C⁻, C⁺) = (1/√r⁺, 2/√r⁻)` with the limit envelope rates.
pub fn predicted_bounds(spec: &NonlinearitySpec) -> Result<(f64, f64), BoundsError> {
    match spec.kind {
        Kind::Ignition | Kind::Bistable => Ok(spec.structure_constants()?.threshold_bounds()),
        other => Err(NonlinearityError::UnsupportedKind(other).into()),
    }
}

/// Largest `L` with `accept(L)`, assuming the accepted set is `(0, L_max)`.
pub fn largest_accepted(mut accept: impl FnMut(f64) -> Result<bool, BoundsError>, mut hi: f64, tol: f64) -> Result<f64, BoundsError> {
    let mut lo = 0.0;
    while accept(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if accept(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest `L` with `accept(L)`, assuming the accepted set is `(L_min, ∞)`.
pub fn smallest_accepted(mut accept: impl FnMut(f64) -> Result<bool, BoundsError>, mut lo: f64, tol: f64) -> Result<f64, BoundsError> {
    let mut hi = lo;
    while !accept(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if accept(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
