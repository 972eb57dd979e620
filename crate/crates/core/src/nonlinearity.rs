//! Reaction terms `f(u)` for `u_t = Δu + f(u)`.
//!
//! Every kind vanishes on `(-∞, 0]` and on `[1, ∞)` except the two toy
//! kinds, which are the unbounded comparison models `(u-θ)_+` and `u-θ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("rate r must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("threshold theta must lie in (0, 1), got {0}")]
    ThetaOutOfRange(f64),
    #[error("bistable threshold theta must be below 1/2 so that the integral of f over (0,1) is positive, got {0}")]
    UnbalancedBistable(f64),
    #[error("monostable exponent p must exceed 1, got {0}")]
    ExponentTooSmall(f64),
    #[error("operation not supported for {0:?}")]
    UnsupportedKind(Kind),
    #[error("delta must lie in ({lo}, {hi}), got {delta}")]
    DeltaOutOfRange { delta: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `r (u-θ)(1-u)` on `(θ,1)`.
    Ignition,
    /// `r u (u-θ)(1-u)` on `(0,1)`.
    Bistable,
    /// `r u^p (1-u)` on `(0,1)`.
    DegenerateMonostable,
    /// `r (u-θ)_+`, unbounded.
    ToyPiecewiseLinear,
    /// `r (u-θ)`, unbounded.
    ToyAffine,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Ignition => "ignition",
            Kind::Bistable => "bistable",
            Kind::DegenerateMonostable => "degenerate_monostable",
            Kind::ToyPiecewiseLinear => "toy_piecewise_linear",
            Kind::ToyAffine => "toy_affine",
        }
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ignition" => Ok(Kind::Ignition),
            "bistable" => Ok(Kind::Bistable),
            "degenerate_monostable" | "monostable" => Ok(Kind::DegenerateMonostable),
            "toy_piecewise_linear" => Ok(Kind::ToyPiecewiseLinear),
            "toy_affine" => Ok(Kind::ToyAffine),
            other => Err(format!("unknown nonlinearity kind `{other}`")),
        }
    }
}

/// Reaction-term selector with its parameters.
///
/// Fields are public so that tests can build degenerate specs (for instance
/// `r = 0`, the pure heat equation) that [`NonlinearitySpec::validate`] rejects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: Kind,
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    2.0
}

/// Rates of the linear envelopes around `θ`.
///
/// `r_plus` bounds `f(u)` from above by `r_plus (u-θ)` on `[θ, delta_plus]`,
/// `r_minus` bounds it from below by `r_minus (u-θ)` on `(-∞, delta_minus]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstants {
    pub r_plus: f64,
    pub r_minus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

impl StructureConstants {
    /// `(1/√r⁺, 2/√r⁻)`.
    pub fn threshold_bounds(&self) -> (f64, f64) {
        (1.0 / self.r_plus.sqrt(), 2.0 / self.r_minus.sqrt())
    }
}

impl NonlinearitySpec {
    pub fn new(kind: Kind, r: f64, theta: f64, p: f64) -> Result<Self, NonlinearityError> {
        let spec = Self { kind, r, theta, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ignition(r: f64, theta: f64) -> Result<Self, NonlinearityError> {
        Self::new(Kind::Ignition, r, theta, default_p())
    }

    pub fn bistable(r: f64, theta: f64) -> Result<Self, NonlinearityError> {
        Self::new(Kind::Bistable, r, theta, default_p())
    }

    pub fn monostable(r: f64, p: f64) -> Result<Self, NonlinearityError> {
        Self::new(Kind::DegenerateMonostable, r, 0.0, p)
    }

    pub fn toy_piecewise_linear(theta: f64) -> Result<Self, NonlinearityError> {
        Self::new(Kind::ToyPiecewiseLinear, 1.0, theta, default_p())
    }

    pub fn toy_affine(theta: f64) -> Result<Self, NonlinearityError> {
        Self::new(Kind::ToyAffine, 1.0, theta, default_p())
    }

    /// Pure heat flow, the `r = 0` ignition edge case. Not a valid spec.
    pub fn pure_heat() -> Self {
        Self {
            kind: Kind::Ignition,
            r: 0.0,
            theta: 0.5,
            p: default_p(),
        }
    }

    pub fn validate(&self) -> Result<(), NonlinearityError> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(NonlinearityError::NonPositiveRate(self.r));
        }
        match self.kind {
            Kind::DegenerateMonostable => {
                if !(self.p > 1.0) || !self.p.is_finite() {
                    return Err(NonlinearityError::ExponentTooSmall(self.p));
                }
            }
            _ => {
                if !(self.theta > 0.0 && self.theta < 1.0) {
                    return Err(NonlinearityError::ThetaOutOfRange(self.theta));
                }
                if self.kind == Kind::Bistable && self.theta >= 0.5 {
                    return Err(NonlinearityError::UnbalancedBistable(self.theta));
                }
            }
        }
        Ok(())
    }

    /// Same spec with the rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            r: self.r * factor,
            ..*self
        }
    }

    /// Threshold level below which the solution is a heat subsolution, if any.
    pub fn threshold(&self) -> Option<f64> {
        match self.kind {
            Kind::DegenerateMonostable => None,
            _ => Some(self.theta),
        }
    }

    #[inline]
    fn pow_p(&self, u: f64) -> f64 {
        if self.p.fract() == 0.0 && self.p <= 32.0 {
            u.powi(self.p as i32)
        } else {
            u.powf(self.p)
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let (r, th) = (self.r, self.theta);
        match self.kind {
            Kind::Ignition => {
                if u > th && u < 1.0 {
                    r * (u - th) * (1.0 - u)
                } else {
                    0.0
                }
            }
            Kind::Bistable => {
                if u > 0.0 && u < 1.0 {
                    r * u * (u - th) * (1.0 - u)
                } else {
                    0.0
                }
            }
            Kind::DegenerateMonostable => {
                if u > 0.0 && u < 1.0 {
                    r * self.pow_p(u) * (1.0 - u)
                } else {
                    0.0
                }
            }
            Kind::ToyPiecewiseLinear => r * (u - th).max(0.0),
            Kind::ToyAffine => r * (u - th),
        }
    }

    /// `F(u) = -∫₀^u f(v) dv`.
    pub fn potential(&self, u: f64) -> f64 {
        let (r, th) = (self.r, self.theta);
        match self.kind {
            Kind::Ignition => {
                let a = 1.0 - th;
                let y = (u.min(1.0) - th).max(0.0);
                -r * (0.5 * a * y * y - y * y * y / 3.0)
            }
            Kind::Bistable => {
                let v = u.clamp(0.0, 1.0);
                let v2 = v * v;
                -r * (-0.25 * v2 * v2 + (1.0 + th) * v2 * v / 3.0 - 0.5 * th * v2)
            }
            Kind::DegenerateMonostable => {
                let v = u.clamp(0.0, 1.0);
                let vp1 = v * self.pow_p(v);
                -r * (vp1 / (self.p + 1.0) - vp1 * v / (self.p + 2.0))
            }
            Kind::ToyPiecewiseLinear => {
                let y = (u - th).max(0.0);
                -0.5 * r * y * y
            }
            Kind::ToyAffine => -r * (0.5 * u * u - th * u),
        }
    }

    /// Limiting linear envelope rates around `θ`, i.e. `δ± → θ⁺`.
    ///
    /// Ignition: `r⁺ = r⁻ = r(1-θ)`; bistable: `r⁺ = r⁻ = rθ(1-θ)`. The
    /// reported deltas equal `θ`; use [`Self::structure_constants_at`] for a
    /// pair that holds pointwise on a non-degenerate interval.
    pub fn structure_constants(&self) -> Result<StructureConstants, NonlinearityError> {
        let (r, th) = (self.r, self.theta);
        let rate = match self.kind {
            Kind::Ignition => r * (1.0 - th),
            Kind::Bistable => r * th * (1.0 - th),
            other => return Err(NonlinearityError::UnsupportedKind(other)),
        };
        Ok(StructureConstants {
            r_plus: rate,
            r_minus: rate,
            delta_plus: th,
            delta_minus: th,
        })
    }

    /// Envelope rates valid pointwise with `δ⁺ = δ⁻ = delta`.
    ///
    /// Ignition accepts `delta ∈ (θ, 1)`, bistable `delta ∈ (θ, 1-θ]`.
    pub fn structure_constants_at(
        &self,
        delta: f64,
    ) -> Result<StructureConstants, NonlinearityError> {
        let (r, th) = (self.r, self.theta);
        match self.kind {
            Kind::Ignition => {
                if !(delta > th && delta < 1.0) {
                    return Err(NonlinearityError::DeltaOutOfRange { delta, lo: th, hi: 1.0 });
                }
                Ok(StructureConstants {
                    r_plus: r * (1.0 - th),
                    r_minus: r * (1.0 - delta),
                    delta_plus: delta,
                    delta_minus: delta,
                })
            }
            Kind::Bistable => {
                if !(delta > th && delta <= 1.0 - th) {
                    return Err(NonlinearityError::DeltaOutOfRange {
                        delta,
                        lo: th,
                        hi: 1.0 - th,
                    });
                }
                // sup of u(1-u) over [θ, δ]
                let peak = if delta >= 0.5 { 0.25 } else { delta * (1.0 - delta) };
                Ok(StructureConstants {
                    r_plus: r * peak,
                    r_minus: r * th * (1.0 - th),
                    delta_plus: delta,
                    delta_minus: delta,
                })
            }
            other => Err(NonlinearityError::UnsupportedKind(other)),
        }
    }

    /// Value at time `dt` of `u' = f(u)`, `u(0) = u0`, closed form where available.
    pub fn reaction_flow(&self, u0: f64, dt: f64) -> f64 {
        self.flow(u0, dt, ReactionMode::ExactWherePossible).0
    }

    /// Flow in the given mode; second component is the clamp applied to an
    /// RK2 step that left `[0,1]`.
    #[inline]
    pub fn flow(&self, u0: f64, dt: f64, mode: ReactionMode) -> (f64, f64) {
        let exact = mode == ReactionMode::ExactWherePossible;
        let (r, th) = (self.r, self.theta);
        match self.kind {
            Kind::Ignition if exact => (self.ignition_exact(u0, dt), 0.0),
            Kind::ToyPiecewiseLinear if exact => {
                if u0 > th {
                    (th + (u0 - th) * (r * dt).exp(), 0.0)
                } else {
                    (u0, 0.0)
                }
            }
            Kind::ToyAffine if exact => (th + (u0 - th) * (r * dt).exp(), 0.0),
            _ => self.midpoint(u0, dt),
        }
    }

    fn ignition_exact(&self, u0: f64, dt: f64) -> f64 {
        let th = self.theta;
        if !(u0 > th && u0 < 1.0) {
            return u0;
        }
        // y = u - θ solves y' = r y (a - y), a = 1 - θ:
        //   y(t) = a / (1 + (a - y0)/y0 · exp(-r a t))
        let a = 1.0 - th;
        let y0 = u0 - th;
        let decay = (-self.r * a * dt).exp();
        let denom = 1.0 + (a - y0) / y0 * decay;
        if !denom.is_finite() || denom <= 1.0 {
            return 1.0;
        }
        th + a / denom
    }

    #[inline]
    fn midpoint(&self, u0: f64, dt: f64) -> (f64, f64) {
        let k1 = self.eval(u0);
        if k1 == 0.0 && self.eval(u0 + 0.5 * dt * k1) == 0.0 {
            return (u0, 0.0);
        }
        let u1 = u0 + dt * self.eval(u0 + 0.5 * dt * k1);
        let bounded = matches!(
            self.kind,
            Kind::Ignition | Kind::Bistable | Kind::DegenerateMonostable
        );
        if bounded && (0.0..=1.0).contains(&u0) {
            let c = u1.clamp(0.0, 1.0);
            (c, (c - u1).abs())
        } else {
            (u1, 0.0)
        }
    }
}

/// How the reaction substep is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReactionMode {
    /// Closed form for ignition and the toys, RK2 midpoint otherwise.
    #[default]
    ExactWherePossible,
    Rk2Always,
}
