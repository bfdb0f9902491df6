use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Exponents and thresholds shared by the estimate checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub d: usize,
    /// `2d / (2 + d)`.
    pub p0: f64,
    /// Calderón-Zygmund exponent, `> 2`.
    pub p: f64,
    /// Estimated Meyers improvement.
    pub delta: f64,
    /// `1/2 - 1/(2 + δ)`.
    pub gamma: f64,
    /// Admissibility exponent in `(0, 1/2)`.
    pub sigma: f64,
    /// `ε ζ(ε, 1) ≤ ε`, the floor scale for `M_t`.
    pub eps_star: f64,
    pub eps0: f64,
}

impl AnalysisConfig {
    pub fn new(d: usize, p: f64, delta: f64, sigma: f64, eps_star: f64, eps0: f64, epsilon: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(m));
        if d < 2 {
            return bad(format!("dimension must be at least 2, got {d}"));
        }
        if !(p > 2.0) {
            return bad(format!("CZ exponent p must exceed 2, got {p}"));
        }
        if !(delta > 0.0) {
            return bad(format!("Meyers exponent delta must be positive, got {delta}"));
        }
        if !(sigma > 0.0 && sigma < 0.5) {
            return bad(format!("sigma must lie in (0, 1/2), got {sigma}"));
        }
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return bad(format!("eps0 must lie in (0, 1), got {eps0}"));
        }
        if !(eps_star >= 0.0 && eps_star <= epsilon) {
            return bad(format!("eps_star = {eps_star} must lie in [0, epsilon = {epsilon}]"));
        }
        Ok(AnalysisConfig {
            d,
            p0: 2.0 * d as f64 / (2.0 + d as f64),
            p,
            delta,
            gamma: 0.5 - 1.0 / (2.0 + delta),
            sigma,
            eps_star,
            eps0,
        })
    }

    /// `t ∈ (ε/ε0, ε0)`, the range of averaging radii for the CZ estimate.
    pub fn cz_range(&self, epsilon: f64) -> (f64, f64) {
        (epsilon / self.eps0, self.eps0)
    }
}
