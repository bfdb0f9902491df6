//! Numerical verification of the excess-decay iteration: pointwise hypothesis
//! checks on sampled `(H, Φ, h)` and a constructive evaluation of the
//! conclusion constant.
//!
//! Writing `I(a, b) = ∫_a^b H(r) dr/r`, `K = max(C0, 1)` and
//! `P(r) = K^{n(r) + 1}` with `n(r) = max(0, ⌈log2(1/r)⌉)` (the doubling chain
//! gives `Φ(r) ≤ P(r) Φ(2)`), the constants are assembled as follows.
//!
//! * Top decade: `c_h = sup_{[1,2]} h / Φ(2)` and `c_H = sup_{[1,2]} H / Φ(2)`
//!   are read from the data, since the hypotheses only constrain `r < 1`.
//! * Slope bound: for `t < 1`, `∫_t^{2t} h/r ≤ c_h ln2 Φ(2) + K I(2t, 2)` and
//!   `h(t) ≤ c_h Φ(2) + (K/ln2) I(2t, 2) + K H(2t)`.
//! * Absorption: for `α ≤ min(ε0, θ/2, 1/40)` and `ε < α²`,
//!   `I(θε/α, 2) ≤ (1/2 + B) I(θε/α, 2) + K² c_h D Φ(2) + I(θα, 2)` with
//!   `B = K² ((1 + K) S + (K/ln2) D)`, `S = sup_{r,s<α} η` and
//!   `D = sup_{ε<α²} ∫_{ε/α}^α η(r, ε/r) dr/r`. Choosing α with
//!   `1/2 + B ≤ 3/4` gives `I(θε/α, 2) ≤ C_H Φ(2)`.
//! * Size bound: `Φ(r) ≤ (K/ln2) ∫_r^{2r} Φ/s` turns the integral bounds into
//!   `Φ ≤ C_Φ Φ(2)` on `[θε/α, 2]`, and `⌈log2(θ/α)⌉` doublings extend it to `[ε, 2]`.
//! * When `ε ≥ α²` the doubling chain alone bounds everything, with the
//!   constant evaluated at `ε = α²` so that it does not depend on ε.

use super::excess::interp_log;
use crate::error::{Error, Result};
use crate::geometry::ModulusFn;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::LN_2;

pub const HYPOTHESES: [&str; 6] = ["H", "a", "b", "c", "d", "e"];

/// `(H, Φ, h)` sampled on an ascending log grid over `(ε, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledTriple {
    pub epsilon: f64,
    pub r: Vec<f64>,
    pub excess: Vec<f64>,
    pub phi: Vec<f64>,
    pub slope: Vec<f64>,
}

impl SampledTriple {
    /// Samples closed-form functions at `per_decade` points per decade on `[ε, 2]`.
    pub fn from_fns(
        epsilon: f64,
        per_decade: usize,
        excess: impl Fn(f64) -> f64,
        phi: impl Fn(f64) -> f64,
        slope: impl Fn(f64) -> f64,
    ) -> Self {
        let n = ((2.0 / epsilon).log10() * per_decade as f64).ceil() as usize;
        let r: Vec<f64> = (0..=n).map(|k| epsilon * (2.0 / epsilon).powf(k as f64 / n as f64)).collect();
        SampledTriple {
            epsilon,
            excess: r.iter().map(|&x| excess(x)).collect(),
            phi: r.iter().map(|&x| phi(x)).collect(),
            slope: r.iter().map(|&x| slope(x)).collect(),
            r,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.r.len();
        if n < 2 || self.excess.len() != n || self.phi.len() != n || self.slope.len() != n {
            return Err(Error::Precondition("sampled triple needs equal-length columns".into()));
        }
        if !self.r.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Precondition("grid must be strictly ascending".into()));
        }
        if self.r[0] > self.epsilon * (1.0 + 1e-9) || (self.r[n - 1] - 2.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("grid must span [ε, 2], got [{}, {}]", self.r[0], self.r[n - 1])));
        }
        let decades = (self.r[n - 1] / self.r[0]).log10();
        if ((n - 1) as f64) < 64.0 * decades * (1.0 - 1e-9) {
            return Err(Error::Resolution(format!("grid has {:.1} points per decade, need 64", (n - 1) as f64 / decades)));
        }
        let cols = [&self.excess, &self.phi, &self.slope];
        if cols.iter().any(|c| c.iter().any(|v| !(v.is_finite() && *v >= 0.0))) {
            return Err(Error::Precondition("H, Φ and h must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn at(&self, col: &[f64], r: f64) -> f64 {
        interp_log(&self.r, col, r.clamp(self.r[0], 2.0)).unwrap_or(0.0)
    }

    /// `(min, max)` of a column over `[a, b]`, including interpolated endpoints.
    fn range(&self, col: &[f64], a: f64, b: f64) -> (f64, f64) {
        let mut lo = self.at(col, a).min(self.at(col, b));
        let mut hi = self.at(col, a).max(self.at(col, b));
        for (r, v) in self.r.iter().zip(col) {
            if *r >= a && *r <= b {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        (lo, hi)
    }

    /// `∫_a^b f(r) dr/r` by the trapezoid rule in `ln r` over grid nodes and endpoints.
    pub fn log_integral(&self, col: &[f64], a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut pts = vec![(a, self.at(col, a))];
        pts.extend(self.r.iter().zip(col).filter(|(r, _)| **r > a && **r < b).map(|(r, v)| (*r, *v)));
        pts.push((b, self.at(col, b)));
        pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 / w[0].0).ln()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationParams {
    pub theta: f64,
    pub eps0: f64,
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// Largest `lhs / rhs` over the grid.
    pub worst_slack: f64,
    pub worst_at: f64,
    pub passed: bool,
    /// Grid points where `Φ(40 r)` was replaced by `Φ(2)`.
    pub ceiling_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConclusionVerdict {
    Pass,
    Fail,
    /// Hypotheses failed or constants could not be produced.
    NotRun,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub hypotheses: BTreeMap<String, HypothesisCheck>,
    pub alpha: Option<f64>,
    /// `"absorption"` when `ε < α²`, `"doubling"` otherwise.
    pub case: Option<String>,
    pub c_out: Option<f64>,
    /// `∫_ε^1 H/r dr + sup_{[ε,1]} Φ`.
    pub conclusion_lhs: f64,
    /// `C_out Φ(2)`.
    pub conclusion_rhs: Option<f64>,
    pub verdict: ConclusionVerdict,
    /// Every intermediate constant of the construction.
    pub constants: BTreeMap<String, f64>,
    pub failure: Option<String>,
}

impl IterationReport {
    pub fn failed_hypotheses(&self) -> Vec<&str> {
        self.hypotheses.iter().filter(|(_, c)| !c.passed).map(|(k, _)| k.as_str()).collect()
    }
}

const SLACK_TOL: f64 = 1e-9;

fn record(map: &mut BTreeMap<String, HypothesisCheck>, name: &str, pts: impl Iterator<Item = (f64, f64, f64)>, ceiling_points: usize) {
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    for (r, lhs, rhs) in pts {
        let s = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if s > worst || at.is_nan() {
            worst = worst.max(s);
            at = r;
        }
    }
    map.insert(
        name.to_string(),
        HypothesisCheck { worst_slack: worst, worst_at: at, passed: worst <= 1.0 + SLACK_TOL, ceiling_points },
    );
}

/// Pointwise checks of the six hypotheses on the grid.
pub fn check_hypotheses(data: &SampledTriple, params: &IterationParams, eta: &ModulusFn) -> BTreeMap<String, HypothesisCheck> {
    let (eps, theta, c0) = (data.epsilon, params.theta, params.c0);
    let mut out = BTreeMap::new();
    let lower: Vec<usize> = (0..data.r.len()).filter(|&k| data.r[k] > eps && data.r[k] < 1.0).collect();

    let mut ceiling = 0;
    let h_pts: Vec<(f64, f64, f64)> = data
        .r
        .iter()
        .filter(|&&r| r > eps / params.eps0 && r < params.eps0 && theta * r >= data.r[0])
        .map(|&r| {
            if 40.0 * r > 2.0 {
                ceiling += 1;
            }
            let lhs = data.at(&data.excess, theta * r);
            let rhs = 0.5 * data.at(&data.excess, r) + c0 * eta.eta(r, eps / r) * data.at(&data.phi, (40.0 * r).min(2.0));
            (r, lhs, rhs)
        })
        .collect();
    record(&mut out, "H", h_pts.into_iter(), ceiling);
    record(&mut out, "a", lower.iter().map(|&k| (data.r[k], data.excess[k], c0 * data.phi[k])), 0);
    record(&mut out, "b", lower.iter().map(|&k| (data.r[k], data.slope[k], c0 * (data.excess[k] + data.phi[k]))), 0);
    record(&mut out, "c", lower.iter().map(|&k| (data.r[k], data.phi[k], c0 * (data.excess[k] + data.slope[k]))), 0);
    // The doubling conditions are also required at r = 1, the closure of the range.
    let upper: Vec<usize> = (0..data.r.len()).filter(|&k| data.r[k] > eps && data.r[k] <= 1.0 + 1e-12).collect();
    record(
        &mut out,
        "d",
        upper.iter().map(|&k| {
            let r = data.r[k];
            (r, data.range(&data.phi, r, 2.0 * r).1, c0 * data.at(&data.phi, 2.0 * r))
        }),
        0,
    );
    record(
        &mut out,
        "e",
        upper.iter().map(|&k| {
            let r = data.r[k];
            let (lo, hi) = data.range(&data.slope, r, 2.0 * r);
            (r, hi - lo, c0 * data.at(&data.excess, 2.0 * r))
        }),
        0,
    );
    out
}

/// `∫_a^b P(r) dr / r` for the doubling-chain bound `P(r) = K^{n(r)+1}`.
fn chain_integral(k: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    // P = K on (1, 2] and K^{n+1} on (2^{-n}, 2^{1-n}] for n ≥ 1.
    let mut n = 0i32;
    loop {
        let (lo, hi) = if n == 0 { (1.0, 2.0) } else { (2f64.powi(-n), 2f64.powi(1 - n)) };
        if hi <= a {
            break;
        }
        let (l, h) = (lo.max(a), hi.min(b));
        if h > l {
            total += k.powi(n + 1) * (h / l).ln();
        }
        n += 1;
    }
    total
}

fn chain_bound(k: f64, r: f64) -> f64 {
    let n = if r >= 1.0 { 0 } else { (1.0 / r).log2().ceil() as i32 };
    k.powi(n + 1)
}

/// Sup and Dini quantities of η at scale α.
fn eta_terms(eta: &ModulusFn, alpha: f64) -> (f64, f64, bool) {
    let s = eta.flatness_sup(alpha, 48, 8.0);
    let (d, ok) = eta.dini_sup(alpha, 24);
    (s, d, ok)
}

/// Runs the hypothesis checks and, when they pass, constructs `C_out` and tests the conclusion.
pub fn iteration_verify(data: &SampledTriple, params: &IterationParams, eta: &ModulusFn) -> Result<IterationReport> {
    data.validate()?;
    if !(params.theta > 0.0 && params.theta < 0.25) {
        return Err(Error::Precondition(format!("theta must lie in (0, 1/4), got {}", params.theta)));
    }
    if !(params.eps0 > 0.0 && params.eps0 < params.theta) {
        return Err(Error::Precondition(format!("eps0 must lie in (0, theta), got {}", params.eps0)));
    }
    if !(params.c0 > 0.0) {
        return Err(Error::Precondition("C0 must be positive".into()));
    }
    let eps = data.epsilon;
    let hypotheses = check_hypotheses(data, params, eta);
    let conclusion_lhs = data.log_integral(&data.excess, eps, 1.0) + data.range(&data.phi, eps, 1.0).1;
    let mut report = IterationReport {
        hypotheses,
        alpha: None,
        case: None,
        c_out: None,
        conclusion_lhs,
        conclusion_rhs: None,
        verdict: ConclusionVerdict::NotRun,
        constants: BTreeMap::new(),
        failure: None,
    };
    let failed = report.failed_hypotheses();
    if !failed.is_empty() {
        report.failure = Some(format!("hypotheses failed: {}", failed.join(", ")));
        return Ok(report);
    }
    let phi2 = data.at(&data.phi, 2.0);
    if !(phi2 > 0.0) {
        report.failure = Some("Φ(2) = 0: the conclusion constant is undefined".into());
        return Ok(report);
    }
    let k = params.c0.max(1.0);
    let (c_h, c_big_h) = {
        let top: Vec<usize> = (0..data.r.len()).filter(|&i| data.r[i] >= 1.0).collect();
        let sup = |col: &[f64]| top.iter().map(|&i| col[i]).fold(data.at(col, 1.0), f64::max) / phi2;
        (sup(&data.slope), sup(&data.excess))
    };
    let c = &mut report.constants;
    c.insert("K".into(), k);
    c.insert("c_h".into(), c_h);
    c.insert("c_H".into(), c_big_h);

    // Largest α on a 2^{-1/4} lattice with 1/2 + B(α) ≤ 3/4.
    let mut alpha = params.eps0.min(params.theta / 2.0).min(1.0 / 40.0) * (1.0 - 1e-9);
    let mut chosen = None;
    while alpha > 1e-100 {
        let (s, d, converged) = eta_terms(eta, alpha);
        let b = k * k * ((1.0 + k) * s + (k / LN_2) * d);
        if converged && 0.5 + b <= 0.75 {
            chosen = Some((alpha, s, d, b));
            break;
        }
        alpha *= 2f64.powf(-0.25);
    }
    let Some((alpha, s, d, b)) = chosen else {
        report.failure = Some("no admissible α above 1e-100: hypotheses hold but the constants are too large".into());
        return Ok(report);
    };
    report.alpha = Some(alpha);
    let c = &mut report.constants;
    c.insert("sup_eta".into(), s);
    c.insert("dini_sup".into(), d);
    c.insert("B".into(), b);

    let theta = params.theta;
    // I(θα, 2) ≤ (K ∫_{θα}^1 P/r + c_H ln 2) Φ(2).
    let top_integral = k * chain_integral(k, theta * alpha, 1.0) + c_big_h * LN_2;
    let c_hh = 4.0 * (k * k * c_h * d + top_integral);
    let c_phi = (k * k).max((k * k / LN_2) * ((1.0 + k) * c_hh + c_h * LN_2));
    let n = (theta / alpha).log2().ceil().max(0.0);
    let kn = k.powf(n);
    let absorption = c_hh + k * (theta / alpha).ln() * kn * c_phi + kn * c_phi;
    let doubling = k * chain_integral(k, alpha * alpha, 1.0) + chain_bound(k, alpha * alpha);
    c.insert("C_H".into(), c_hh);
    c.insert("C_Phi".into(), c_phi);
    c.insert("patch_doublings".into(), n);
    c.insert("C_out_absorption".into(), absorption);
    c.insert("C_out_doubling".into(), doubling);
    let (case, c_out) = if eps < alpha * alpha { ("absorption", absorption) } else { ("doubling", doubling) };
    report.case = Some(case.into());
    if !c_out.is_finite() {
        report.failure = Some(format!("C_out overflows in the {case} case"));
        return Ok(report);
    }
    report.c_out = Some(c_out);
    report.conclusion_rhs = Some(c_out * phi2);
    report.verdict = if conclusion_lhs <= c_out * phi2 { ConclusionVerdict::Pass } else { ConclusionVerdict::Fail };
    Ok(report)
}

/// Smallest `C0` (times `margin`) for which every hypothesis holds on the grid.
pub fn measure_c0(data: &SampledTriple, theta: f64, eps0: f64, eta: &ModulusFn, margin: f64) -> f64 {
    let probe = IterationParams { theta, eps0, c0: 1.0 };
    let base = check_hypotheses(data, &probe, eta);
    let mut c0 = ["a", "b", "c", "d", "e"].iter().map(|k| base[*k].worst_slack).fold(0.0, f64::max);
    // (H) is affine in C0: H(θr) - H(r)/2 ≤ C0 η Φ(40r).
    let eps = data.epsilon;
    for &r in &data.r {
        if r > eps / eps0 && r < eps0 && theta * r >= data.r[0] {
            let gap = data.at(&data.excess, theta * r) - 0.5 * data.at(&data.excess, r);
            let w = eta.eta(r, eps / r) * data.at(&data.phi, (40.0 * r).min(2.0));
            if gap > 0.0 {
                c0 = c0.max(if w > 0.0 { gap / w } else { f64::INFINITY });
            }
        }
    }
    c0 * margin
}
