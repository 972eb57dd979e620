//! Ordinary least squares on transformed abscissae.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `x ↦ ln(1/x)`, for `L*` against `ln(1/ε)`.
    LinearVsLnInvEps,
    LinearVsTheta,
    /// `x ↦ ln(1/(1-2x))`.
    LinearVsLnInv1Minus2Theta,
}

impl Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::LinearVsLnInvEps => (1.0 / x).ln(),
            Transform::LinearVsTheta => x,
            Transform::LinearVsLnInv1Minus2Theta => (1.0 / (1.0 - 2.0 * x)).ln(),
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ln_inv_eps" | "linear_vs_ln_inv_eps" => Ok(Transform::LinearVsLnInvEps),
            "theta" | "linear_vs_theta" => Ok(Transform::LinearVsTheta),
            "ln_inv_1m2theta" | "linear_vs_ln_inv1_minus2_theta" => Ok(Transform::LinearVsLnInv1Minus2Theta),
            other => Err(format!("unknown transform `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all transformed abscissae coincide")]
    DegenerateAbscissa,
    #[error("non-finite point ({x}, {y}) after transform")]
    NonFinite { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub transform: Transform,
}

pub fn fit(points: &[(f64, f64)], transform: Transform) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (transform.apply(x), y)).collect();
    if let Some(&(x, y)) = xy.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFinite { x, y });
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * f64::EPSILON * xy.iter().map(|p| p.0 * p.0).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(FitError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n_points: xy.len(),
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let f = fit(&pts, Transform::LinearVsTheta).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
        assert_eq!(f.n_points, 5);
    }

    #[test]
    fn recovers_slope_through_transforms() {
        let eps = [1e-3f64, 3e-3, 1e-2, 3e-2];
        let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e, 1.43 * (1.0 / e).ln() - 0.7)).collect();
        let f = fit(&pts, Transform::LinearVsLnInvEps).unwrap();
        assert!((f.slope - 1.43).abs() < 1e-12 && (f.intercept + 0.7).abs() < 1e-12);
        let th = [0.4f64, 0.42, 0.44, 0.46];
        let pts: Vec<(f64, f64)> = th.iter().map(|&t| (t, 0.99 * (1.0 / (1.0 - 2.0 * t)).ln() + 0.5)).collect();
        let f = fit(&pts, Transform::LinearVsLnInv1Minus2Theta).unwrap();
        assert!((f.slope - 0.99).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(fit(&[(1.0, 1.0), (2.0, 2.0)], Transform::LinearVsTheta), Err(FitError::TooFewPoints(2)));
        assert_eq!(
            fit(&[(0.3, 1.0), (0.3, 2.0), (0.3, 0.0)], Transform::LinearVsTheta),
            Err(FitError::DegenerateAbscissa)
        );
        assert!(matches!(
            fit(&[(0.0, 1.0), (0.1, 2.0), (0.2, 0.0)], Transform::LinearVsLnInvEps),
            Err(FitError::NonFinite { .. })
        ));
    }

    #[test]
    fn noisy_data_has_partial_r_squared() {
        let pts = [(0.0, 0.0), (1.0, 2.0), (2.0, 1.0), (3.0, 3.0)];
        let f = fit(&pts, Transform::LinearVsTheta).unwrap();
        assert!(f.r_squared > 0.0 && f.r_squared < 1.0);
    }
}
