use super::averaging::SampledField;
use super::config::AnalysisConfig;
use super::excess::ScaleProfile;
use super::integrate::BallIntegrator;
use crate::error::{Error, Result};
use crate::geometry::{norm, sub, Point};
use crate::mesh::{clip_convex, polygon_area};
use crate::pde::DiscreteField;
use crate::stats::{linear_fit, LinearFit};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// One ball-indexed estimate evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallRecord {
    pub center: Point,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub flags: Vec<String>,
}

impl BallRecord {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Worst ratio over unflagged records.
pub fn worst_ratio(records: &[BallRecord]) -> Option<f64> {
    records.iter().filter(|r| r.is_clean()).map(|r| r.ratio).reduce(f64::max)
}

fn fint_domain_grad2(integ: &BallIntegrator, r: f64) -> (f64, f64) {
    let c = [0.0, 0.0];
    let area = integ.covered_area(c, r);
    (integ.grad_power(c, r, 2.0), area)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzResult {
    pub scales: Vec<f64>,
    /// `(fint_{D_r} |∇u|^2)^{1/2} / (fint_{D_outer} |∇u|^2)^{1/2}`.
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
}

pub fn check_lipschitz(integ: &BallIntegrator, scales: &[f64], outer: f64) -> Result<LipschitzResult> {
    let (top, area) = fint_domain_grad2(integ, outer);
    let denom = (top / area).sqrt();
    if !(denom >= 1e-14) {
        return Err(Error::DegenerateInstance(format!("(fint_D_{outer} |∇u|^2)^(1/2) = {denom:.3e}")));
    }
    let ratios: Vec<f64> = scales
        .iter()
        .map(|&r| {
            let (g, a) = fint_domain_grad2(integ, r);
            if a > 0.0 { (g / a).sqrt() / denom } else { 0.0 }
        })
        .collect();
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(LipschitzResult { scales: scales.to_vec(), ratios, sup_ratio })
}

/// Log-log fit of `(∫_{D_r} |∇u|^2)^{1/2}` against `r`; the slope is `d/2` when averages stay bounded.
pub fn convexity_fit(integ: &BallIntegrator, scales: &[f64]) -> Result<(Vec<(f64, f64)>, LinearFit)> {
    let pts: Vec<(f64, f64)> = scales.iter().map(|&r| (r, fint_domain_grad2(integ, r).0.sqrt())).collect();
    let logs: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    let fit = linear_fit(&logs).ok_or_else(|| Error::DegenerateInstance("convexity fit needs two scales".into()))?;
    Ok((pts, fit))
}

/// `(fint_{B_t} |∇u|^2)^{1/2}` against `(1/t)(fint_{B_2t} |u - k|^2)^{1/2}`, with `k` the mean
/// of `u` when `B_2t` lies inside the meshed region and `k = 0` otherwise.
pub fn check_caccioppoli(integ: &BallIntegrator, balls: &[(Point, f64)]) -> Vec<BallRecord> {
    balls
        .iter()
        .map(|&(x, t)| {
            let mut flags = Vec::new();
            if let Err(e) = integ.check_ball(x, 2.0 * t) {
                flags.push(format!("outside: {e}"));
                return BallRecord { center: x, t, lhs: 0.0, rhs: 0.0, ratio: 0.0, flags };
            }
            let big = PI * 4.0 * t * t;
            let interior = (integ.covered_area(x, 2.0 * t) - big).abs() <= 1e-9 * big;
            let m = integ.field.m;
            let mean: Vec<f64> = if interior {
                (0..m).map(|k| integ.quadratic(x, 2.0 * t, |_, _, u| u[k]) / big).collect()
            } else {
                vec![0.0; m]
            };
            let l2 = integ.quadratic(x, 2.0 * t, |_, _, u| u.iter().zip(&mean).map(|(v, k)| (v - k).powi(2)).sum());
            let rhs = (l2.max(0.0) / big).sqrt() / t;
            let lhs = (integ.grad_power(x, t, 2.0) / (PI * t * t)).sqrt();
            if rhs < 1e-14 {
                flags.push("denominator_below_1e-14".into());
            }
            BallRecord { center: x, t, lhs, rhs, ratio: ratio(lhs, rhs), flags }
        })
        .collect()
}

/// `(fint_{B_t} |∇u|^2)^{1/2}` against `(fint_{B_4t} |∇u|^{p0})^{1/p0}`.
pub fn check_reverse_holder(integ: &BallIntegrator, cfg: &AnalysisConfig, balls: &[(Point, f64)]) -> Vec<BallRecord> {
    balls
        .iter()
        .map(|&(x, t)| {
            let mut flags = Vec::new();
            if t <= cfg.eps_star {
                flags.push("t_below_eps_star".into());
            }
            if let Err(e) = integ.check_ball(x, 4.0 * t) {
                flags.push(format!("outside: {e}"));
                return BallRecord { center: x, t, lhs: 0.0, rhs: 0.0, ratio: 0.0, flags };
            }
            let lhs = (integ.grad_power(x, t, 2.0) / (PI * t * t)).sqrt();
            let rhs = (integ.grad_power(x, 4.0 * t, cfg.p0) / (PI * 16.0 * t * t)).powf(1.0 / cfg.p0);
            if integ.covered_area(x, t) == 0.0 {
                flags.push("extension_zone".into());
            } else if rhs < 1e-14 {
                flags.push("denominator_below_1e-14".into());
            }
            BallRecord { center: x, t, lhs, rhs, ratio: ratio(lhs, rhs), flags }
        })
        .collect()
}

/// `(fint_{B_r(c)} |M_t ∇u|^p)^{1/p}` against `(fint_{B_20r(c)} |M_t ∇u|^2)^{1/2}` on a sampled `M_t` field.
pub fn check_large_scale_cz(
    mt: &SampledField,
    cfg: &AnalysisConfig,
    epsilon: f64,
    t: f64,
    center: Point,
    r: f64,
) -> Result<BallRecord> {
    let (lo, hi) = cfg.cz_range(epsilon);
    if !(t > lo && t < hi) {
        return Err(Error::Precondition(format!("averaging radius t = {t} outside (ε/ε0, ε0) = ({lo:.4}, {hi:.4})")));
    }
    if mt.spacing > t / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!("sample spacing {} coarser than t/4 = {}", mt.spacing, t / 4.0)));
    }
    let lhs = mt.ball_mean(center, r, cfg.p)?;
    let rhs = mt.ball_mean(center, 20.0 * r, 2.0)?;
    Ok(BallRecord { center, t, lhs, rhs, ratio: ratio(lhs, rhs), flags: Vec::new() })
}

/// `(fint_{B_r} |M_t ∇u|^q)^{1/q} / (fint_{B_r} |∇u|^2)^{1/2}`, the integrability ratio behind the δ estimate.
pub fn meyers_ratio(mt: &SampledField, integ: &BallIntegrator, center: Point, r: f64, q: f64) -> Result<f64> {
    let top = mt.ball_mean(center, r, q)?;
    let bottom = integ.ball_grad_mean(center, r, 2.0)?;
    Ok(ratio(top, bottom))
}

/// Largest `q - 2` over `ratios = [(q, ratio at each ε)]` whose relative spread stays within `tolerance`.
pub fn estimate_delta(ratios: &[(f64, Vec<f64>)], tolerance: f64) -> Option<f64> {
    ratios
        .iter()
        .filter(|(_, v)| !v.is_empty() && crate::stats::relative_spread(v) <= tolerance)
        .map(|(q, _)| q - 2.0)
        .filter(|d| *d > 0.0)
        .reduce(f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproximationRecord {
    pub r: f64,
    /// `(fint_{B_r} |∇u - ∇w|^2)^{1/2}`.
    pub lhs: f64,
    /// `ζ^γ (fint_{B_4r} |∇u|^2)^{1/2}`.
    pub rhs_flatness: f64,
    /// `(ε/r + ζ)^σ (fint_{B_20r} |∇u|^2)^{1/2}`, omitted when `B_20r` leaves the solved ball.
    pub rhs_scale: Option<f64>,
    pub flags: Vec<String>,
}

/// `∫_{B_r} |∇u - ∇w|^2` on the common refinement of the two meshes, each field zero outside its mesh.
pub fn gradient_difference_l2(u: &BallIntegrator, w: &BallIntegrator, r: f64) -> Result<f64> {
    let c = [0.0, 0.0];
    let (um, wm) = (&u.field.mesh, &w.field.mesh);
    if u.field.m != w.field.m {
        return Err(Error::Geometry("fields have different component counts".into()));
    }
    let m = u.field.m;
    let uu = u.grad_power(c, r, 2.0);
    let ww = w.grad_power(c, r, 2.0);
    let mut cross = 0.0;
    let grid = u.field.grid();
    for tw in 0..wm.triangles.len() {
        let tri_w = wm.triangle(tw);
        if tri_w.iter().any(|p| norm(*p) > r * (1.0 + 1e-9)) {
            return Err(Error::Geometry("the comparison mesh extends beyond B_r".into()));
        }
        let gw = w.field.gradient(tw);
        let lo = [tri_w[0][0].min(tri_w[1][0]).min(tri_w[2][0]), tri_w[0][1].min(tri_w[1][1]).min(tri_w[2][1])];
        let hi = [tri_w[0][0].max(tri_w[1][0]).max(tri_w[2][0]), tri_w[0][1].max(tri_w[1][1]).max(tri_w[2][1])];
        let mut seen = Vec::new();
        grid.candidates(lo, hi, |tu| seen.push(tu));
        seen.sort_unstable();
        seen.dedup();
        for tu in seen {
            let poly = clip_convex(&tri_w, &um.triangle(tu));
            if poly.len() < 3 {
                continue;
            }
            let a = polygon_area(&poly);
            if a <= 0.0 {
                continue;
            }
            let gu = u.field.gradient(tu);
            let dotp: f64 = (0..m).map(|k| gu[k][0] * gw[k][0] + gu[k][1] * gw[k][1]).sum();
            cross += a * dotp;
        }
    }
    Ok((uu + ww - 2.0 * cross).max(0.0))
}

/// Mesoscopic approximation error between `u` on `D_2` and `w` on `T_r^+`.
pub fn approximation_error(
    u: &BallIntegrator,
    w: &BallIntegrator,
    r: f64,
    zeta: f64,
    cfg: &AnalysisConfig,
    epsilon: f64,
    solved_radius: f64,
) -> Result<ApproximationRecord> {
    let c = [0.0, 0.0];
    let lhs = (gradient_difference_l2(u, w, r)? / (PI * r * r)).sqrt();
    let rhs_flatness = zeta.powf(cfg.gamma) * u.ball_grad_mean(c, (4.0 * r).min(solved_radius), 2.0)?;
    let mut flags = Vec::new();
    if 4.0 * r > solved_radius {
        flags.push("flatness_ball_clipped".into());
    }
    let rhs_scale = if 20.0 * r <= solved_radius * (1.0 + 1e-12) {
        Some((epsilon / r + zeta).powf(cfg.sigma) * u.ball_grad_mean(c, 20.0 * r, 2.0)?)
    } else {
        flags.push("scale_rhs_omitted".into());
        None
    };
    Ok(ApproximationRecord { r, lhs, rhs_flatness, rhs_scale, flags })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRecord {
    pub epsilon: f64,
    pub r: f64,
    /// `‖w_ε - w_0‖_{L^2(T_r^+)}`.
    pub lhs: f64,
    /// `lhs / (r ‖∇u‖_{L^2(D_2r)})`.
    pub normalized: f64,
    /// `(ε/r)^{1/2}`.
    pub predicted: f64,
    /// `|lhs_h - lhs_2h|` when a coarser solve is supplied.
    pub fem_error: Option<f64>,
    pub flags: Vec<String>,
}

/// L^2 distance of two fields on one mesh.
pub fn l2_distance(a: &DiscreteField, b: &DiscreteField) -> Result<f64> {
    if !Arc::ptr_eq(&a.mesh, &b.mesh) && a.mesh.nodes != b.mesh.nodes {
        return Err(Error::Geometry("rate check needs both fields on the same mesh".into()));
    }
    let values: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let diff = DiscreteField::new(a.mesh.clone(), a.m, values, None);
    let integ = BallIntegrator::new(&diff);
    let (lo, hi) = a.mesh.bounding_box();
    let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let big = norm(sub(hi, c)) * 1.01;
    Ok(integ.quadratic(c, big, |_, _, u| u.iter().map(|v| v * v).sum()).max(0.0).sqrt())
}

pub fn check_rate(
    u: &BallIntegrator,
    w_eps: &DiscreteField,
    w_0: &DiscreteField,
    r: f64,
    epsilon: f64,
    coarse_lhs: Option<f64>,
) -> Result<RateRecord> {
    let lhs = l2_distance(w_eps, w_0)?;
    let grad = u.grad_power([0.0, 0.0], 2.0 * r, 2.0).sqrt();
    let normalized = ratio(lhs, r * grad);
    let fem_error = coarse_lhs.map(|c| (lhs - c).abs());
    let mut flags = Vec::new();
    if fem_error.is_some_and(|e| e > 0.2 * lhs) {
        flags.push("fem_error_unreliable".into());
    }
    Ok(RateRecord { epsilon, r, lhs, normalized, predicted: (epsilon / r).sqrt(), fem_error, flags })
}

/// Regression of `ln normalized` on `ln ε`.
pub fn fit_rate(records: &[RateRecord]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.normalized > 0.0)
        .map(|r| (r.epsilon.ln(), r.normalized.ln()))
        .collect();
    linear_fit(&pts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRecord {
    pub r: f64,
    /// `H(θ r)`.
    pub lhs: f64,
    /// `H(r) / 2`.
    pub half: f64,
    /// `(ε/r + ζ(r, ε/r))^σ Φ(min(40 r, ceiling))`.
    pub weight: f64,
    pub ceiling: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayResult {
    pub records: Vec<DecayRecord>,
    /// Smallest `C ≥ 0` with `H(θr) ≤ H(r)/2 + C weight` on every record.
    pub c_fit: f64,
    /// `H(θr) / H(r)` per record.
    pub ratios: Vec<f64>,
}

/// Excess decay over the profile scales `r ≥ r_min` for which `θ r` is also sampled.
pub fn check_excess_decay(
    profile: &ScaleProfile,
    theta: f64,
    sigma: f64,
    epsilon: f64,
    ceiling: f64,
    r_min: f64,
) -> Result<DecayResult> {
    if !(theta > 0.0 && theta < 0.25) {
        return Err(Error::Precondition(format!("theta must lie in (0, 1/4), got {theta}")));
    }
    let zeta = profile.zeta_envelope();
    let mut records = Vec::new();
    for (k, &r) in profile.scales.iter().enumerate() {
        if r < r_min * (1.0 - 1e-12) {
            continue;
        }
        let Some(lhs) = profile.interp(&profile.excess, theta * r) else { continue };
        let big = 40.0 * r;
        let at = big.min(ceiling);
        let Some(phi) = profile.interp(&profile.phi, at) else { continue };
        records.push(DecayRecord {
            r,
            lhs,
            half: profile.excess[k] / 2.0,
            weight: (epsilon / r + zeta[k]).powf(sigma) * phi,
            ceiling: big > ceiling,
        });
    }
    if records.len() < 4 {
        return Err(Error::InsufficientLadder { found: records.len(), needed: 4 });
    }
    let c_fit = records.iter().map(|d| ratio((d.lhs - d.half).max(0.0), d.weight)).fold(0.0, f64::max);
    let ratios = records.iter().map(|d| ratio(d.lhs, 2.0 * d.half)).collect();
    Ok(DecayResult { records, c_fit, ratios })
}
