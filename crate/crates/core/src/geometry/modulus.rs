use super::slab::ModulusSample;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Closed-form and tabulated flatness moduli `ζ(r, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    /// `coefficient * r^exponent`.
    PowerR { coefficient: f64, exponent: f64 },
    /// `coefficient * s^exponent`.
    PowerS { coefficient: f64, exponent: f64 },
    /// `coefficient / (1 + |ln r|)`.
    InverseLog { coefficient: f64 },
    Sum { terms: Vec<ModulusKind> },
    /// Log-log interpolation in `r`, constant beyond the table ends. Ignores `s`.
    Tabulated { r: Vec<f64>, zeta: Vec<f64> },
    /// `s^σ + ζ(r, s)^σ + ζ(θ r, s / θ)` for an inner modulus ζ.
    IterationEta { zeta: Box<ModulusKind>, sigma: f64, theta: f64 },
}

impl ModulusKind {
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        match self {
            ModulusKind::PowerR { coefficient, exponent } => coefficient * r.powf(*exponent),
            ModulusKind::PowerS { coefficient, exponent } => coefficient * s.powf(*exponent),
            ModulusKind::InverseLog { coefficient } => coefficient / (1.0 + r.ln().abs()),
            ModulusKind::Sum { terms } => terms.iter().map(|t| t.eval(r, s)).sum(),
            ModulusKind::Tabulated { r: rs, zeta } => {
                if r <= rs[0] {
                    return zeta[0];
                }
                let n = rs.len();
                if r >= rs[n - 1] {
                    return zeta[n - 1];
                }
                let k = rs.partition_point(|&x| x <= r).max(1) - 1;
                let f = (r / rs[k]).ln() / (rs[k + 1] / rs[k]).ln();
                let (a, b) = (zeta[k].max(1e-300), zeta[k + 1].max(1e-300));
                (a.ln() * (1.0 - f) + b.ln() * f).exp()
            }
            ModulusKind::IterationEta { zeta, sigma, theta } => {
                let z = |r: f64, s: f64| zeta.eval(r, s).clamp(0.0, 1.0);
                s.powf(*sigma) + z(r, s).powf(*sigma) + z(theta * r, s / theta)
            }
        }
    }

    /// Fits `C s` with `C` the smallest constant dominating the samples at scale `epsilon`.
    pub fn fit_roughness(samples: &[ModulusSample], epsilon: f64) -> ModulusKind {
        let c = samples.iter().map(|m| m.zeta * m.r / epsilon).fold(0.0, f64::max);
        ModulusKind::PowerS { coefficient: c, exponent: 1.0 }
    }

    /// Fits `C r^α`: α by least squares in log-log, `C` as the dominating constant.
    pub fn fit_scale_power(samples: &[ModulusSample]) -> Result<ModulusKind> {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|m| m.zeta > 0.0)
            .map(|m| (m.r.ln(), m.zeta.ln()))
            .collect();
        let fit = crate::stats::linear_fit(&pts)
            .ok_or_else(|| Error::DegenerateInstance("need two positive flatness samples".into()))?;
        let alpha = fit.slope;
        let c = samples.iter().map(|m| m.zeta / m.r.powf(alpha)).fold(0.0, f64::max);
        Ok(ModulusKind::PowerR { coefficient: c, exponent: alpha })
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ModulusKind::PowerR { coefficient, exponent } | ModulusKind::PowerS { coefficient, exponent } => {
                *coefficient >= 0.0 && *exponent > 0.0 && coefficient.is_finite()
            }
            ModulusKind::InverseLog { coefficient } => *coefficient >= 0.0 && coefficient.is_finite(),
            ModulusKind::Sum { terms } => return terms.iter().try_for_each(|t| t.validate()),
            ModulusKind::Tabulated { r, zeta } => {
                !r.is_empty()
                    && r.len() == zeta.len()
                    && r.windows(2).all(|w| w[0] < w[1])
                    && r[0] > 0.0
                    && zeta.iter().all(|z| z.is_finite() && *z >= 0.0)
            }
            ModulusKind::IterationEta { zeta, sigma, theta } => {
                zeta.validate()?;
                *sigma > 0.0 && *sigma < 1.0 && *theta > 0.0 && *theta < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid modulus {self:?}")))
        }
    }
}

/// A flatness modulus together with the exponent σ defining `η = ζ^σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusFn {
    pub kind: ModulusKind,
    /// `σ ∈ (0, 1]`; `σ = 1` uses ζ itself as η.
    pub sigma: f64,
    #[serde(default)]
    pub label: String,
}

impl ModulusFn {
    pub fn new(kind: ModulusKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(Error::Config(format!("sigma must lie in (0, 1], got {sigma}")));
        }
        kind.validate()?;
        Ok(ModulusFn { label: format!("{kind:?}"), kind, sigma })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// ζ(r, s) clipped to `[0, 1]`.
    pub fn zeta(&self, r: f64, s: f64) -> f64 {
        self.kind.eval(r, s).clamp(0.0, 1.0)
    }

    pub fn eta(&self, r: f64, s: f64) -> f64 {
        self.zeta(r, s).powf(self.sigma)
    }

    /// `sup_{r, s < t} η(r, s)` over a log grid spanning `decades` below `t`.
    pub fn flatness_sup(&self, t: f64, points: usize, decades: f64) -> f64 {
        let top = t * (1.0 - 1e-12);
        let grid: Vec<f64> = (0..points)
            .map(|i| top * 10f64.powf(-decades * i as f64 / (points - 1) as f64))
            .collect();
        let mut best: f64 = 0.0;
        for &r in &grid {
            for &s in &grid {
                best = best.max(self.eta(r, s));
            }
        }
        best
    }

    /// `∫_{ε/t}^{t} η(r, ε/r) dr / r` by Simpson's rule in `ln r` with doubling.
    /// Returns the value and whether the relative change fell below 1%.
    pub fn dini_integral(&self, t: f64, eps: f64) -> (f64, bool) {
        let (a, b) = ((eps / t).ln(), t.ln());
        if b <= a {
            return (0.0, true);
        }
        let f = |u: f64| {
            let r = u.exp();
            self.eta(r, eps / r)
        };
        let simpson = |n: usize| {
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for i in 1..n {
                acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let mut n = 32;
        let mut prev = simpson(n);
        while n < 1 << 15 {
            n *= 2;
            let next = simpson(n);
            let change = (next - prev).abs();
            if change <= 1e-10 * next.abs() || change == 0.0 {
                return (next, true);
            }
            prev = next;
        }
        let last = simpson(n / 2);
        (prev, (prev - last).abs() <= 0.01 * prev.abs())
    }

    /// `sup_{ε < t^2} ∫_{ε/t}^{t} η(r, ε/r) dr/r` with ε on a log grid over `[t^4, t^2)`.
    pub fn dini_sup(&self, t: f64, points: usize) -> (f64, bool) {
        let (lo, hi) = ((4.0 * t.ln()).exp(), t * t * (1.0 - 1e-9));
        let mut best: f64 = 0.0;
        let mut converged = true;
        for i in 0..points {
            let e = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
            let (v, ok) = self.dini_integral(t, e);
            converged &= ok;
            best = best.max(v);
        }
        (best, converged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub r_points: usize,
    pub r_decades: f64,
    pub eps_points: usize,
}

impl Default for AdmissibilityGrid {
    fn default() -> Self {
        AdmissibilityGrid { t_min: 1e-12, t_max: 0.5, n_t: 40, r_points: 48, r_decades: 8.0, eps_points: 24 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Ascending.
    pub t: Vec<f64>,
    pub flatness_sup: Vec<f64>,
    pub dini_sup: Vec<f64>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

/// Threshold below which a sup counts as small at the finest scale.
const SMALL: f64 = 0.05;

/// Numerical admissibility of `η = ζ^σ`: both the flatness sup and the Dini sup
/// must tend to zero as `t → 0`.
pub fn check_admissible(modulus: &ModulusFn, grid: &AdmissibilityGrid) -> Result<AdmissibilityReport> {
    if !(grid.t_min > 0.0 && grid.t_min < grid.t_max && grid.t_max < 1.0 && grid.n_t >= 4) {
        return Err(Error::Config(format!("invalid admissibility grid {grid:?}")));
    }
    let t: Vec<f64> = (0..grid.n_t)
        .map(|i| grid.t_min * (grid.t_max / grid.t_min).powf(i as f64 / (grid.n_t - 1) as f64))
        .collect();
    let mut diagnostics = Vec::new();
    let flat: Vec<f64> = t.iter().map(|&t| modulus.flatness_sup(t, grid.r_points, grid.r_decades)).collect();
    let mut converged = true;
    let dini: Vec<f64> = t
        .iter()
        .map(|&t| {
            let (v, ok) = modulus.dini_sup(t, grid.eps_points);
            if !ok {
                converged = false;
            }
            v
        })
        .collect();
    if !converged {
        diagnostics.push("Dini quadrature did not settle below 1% relative change".into());
    }
    // Trend over the last decade: value at t_min against value near 10 t_min.
    let j = t.partition_point(|&x| x < 10.0 * grid.t_min).min(t.len() - 1);
    let trend = |v: &[f64]| if v[j] > 0.0 { v[0] / v[j] } else if v[0] > 0.0 { f64::INFINITY } else { 0.0 };
    let (tf, td) = (trend(&flat), trend(&dini));
    let small = flat[0] < SMALL && dini[0] < SMALL;
    let decreasing = tf < 1.0 && td < 1.0;
    let stuck = (flat[0] >= SMALL && tf >= 0.95) || (dini[0] >= SMALL && td >= 0.95);
    let verdict = if !converged {
        Verdict::Inconclusive
    } else if small && decreasing {
        Verdict::Pass
    } else if stuck {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    diagnostics.push(format!(
        "final flatness sup {:.3e} (trend {:.3}), final Dini sup {:.3e} (trend {:.3})",
        flat[0], tf, dini[0], td
    ));
    Ok(AdmissibilityReport { t, flatness_sup: flat, dini_sup: dini, verdict, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_log_log() {
        let m = ModulusKind::Tabulated { r: vec![0.1, 1.0], zeta: vec![0.01, 0.1] };
        assert!((m.eval(10f64.powf(-0.5), 0.0) - 10f64.powf(-1.5)).abs() < 1e-14);
        assert_eq!(m.eval(0.01, 0.0), 0.01);
    }

    #[test]
    fn sigma_outside_range_is_rejected() {
        assert!(ModulusFn::new(ModulusKind::PowerS { coefficient: 1.0, exponent: 1.0 }, 0.0).is_err());
    }
}
