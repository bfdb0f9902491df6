use super::integrate::BallIntegrator;
use crate::error::{Error, Result};
use crate::geometry::{dot, fit_slab, Point, RoughDomain};
use serde::Serialize;
use std::f64::consts::PI;

/// `Φ(r)`, `H(r)`, `q_r` and `h(r) = |q_r|` at one scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Excess {
    pub phi: f64,
    pub excess: f64,
    pub q: Vec<f64>,
    pub slope: f64,
}

/// Excess quantities over `D_r = D ∩ B_r(0)` for the direction `normal`.
///
/// `q = ∫(n·x) u / ∫(n·x)^2` componentwise and `H` is evaluated by a second
/// pass over the residual `u - (n·x) q`.
pub fn excess_quantities(integ: &BallIntegrator, normal: Point, r: f64) -> Result<Excess> {
    let m = integ.field.m;
    let c = [0.0, 0.0];
    let area = integ.covered_area(c, r);
    let nn = integ.quadratic(c, r, |_, x, _| dot(normal, x).powi(2));
    if !(nn >= 1e-14 * r * r * PI * r * r) || area <= 0.0 {
        return Err(Error::DegenerateScale { r, reason: format!("∫(n·x)^2 = {nn:.3e} over D_r") });
    }
    let mut q = vec![0.0; m];
    for (k, qk) in q.iter_mut().enumerate() {
        *qk = integ.quadratic(c, r, |_, x, u| dot(normal, x) * u[k]) / nn;
    }
    let uu = integ.quadratic(c, r, |_, _, u| u.iter().map(|v| v * v).sum());
    let res = integ.quadratic(c, r, |_, x, u| {
        let s = dot(normal, x);
        u.iter().zip(&q).map(|(v, qk)| (v - s * qk).powi(2)).sum()
    });
    let phi = (uu.max(0.0) / area).sqrt() / r;
    let excess = (res.max(0.0) / area).sqrt() / r;
    let slope = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Excess { phi, excess, q, slope })
}

/// Excess quantities along a ladder of scales at the origin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleProfile {
    /// Ascending.
    pub scales: Vec<f64>,
    pub phi: Vec<f64>,
    pub excess: Vec<f64>,
    pub slope: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub normals: Vec<Point>,
    /// Raw slab flatness `ζ(r)` at each scale.
    pub zeta: Vec<f64>,
    pub flags: Vec<String>,
}

impl ScaleProfile {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// `ζ(r, ε/r)` made monotone as `max_{ρ ≤ r} ρ ζ(ρ) / r`.
    pub fn zeta_envelope(&self) -> Vec<f64> {
        let mut best: f64 = 0.0;
        self.scales
            .iter()
            .zip(&self.zeta)
            .map(|(r, z)| {
                best = best.max(r * z);
                best / r
            })
            .collect()
    }

    /// Linear interpolation in `ln r` of one sampled column.
    pub fn interp(&self, values: &[f64], r: f64) -> Option<f64> {
        interp_log(&self.scales, values, r)
    }
}

/// Linear interpolation in `ln r` on an ascending grid; `None` outside it.
pub fn interp_log(grid: &[f64], values: &[f64], r: f64) -> Option<f64> {
    let n = grid.len();
    if n == 0 || r < grid[0] * (1.0 - 1e-12) || r > grid[n - 1] * (1.0 + 1e-12) {
        return None;
    }
    let k = grid.partition_point(|&x| x <= r);
    if k == 0 {
        return Some(values[0]);
    }
    if k >= n {
        return Some(values[n - 1]);
    }
    let f = (r / grid[k - 1]).ln() / (grid[k] / grid[k - 1]).ln();
    Some(values[k - 1] * (1.0 - f) + values[k] * f)
}

/// Computes the profile on `scales` (any order). The slab normal at each scale
/// comes from `fit_slab`; a degenerate fit reuses the next larger scale's normal.
pub fn build_profile(integ: &BallIntegrator, domain: &RoughDomain, scales: &[f64]) -> Result<ScaleProfile> {
    let mut sorted = scales.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    let mut last: Option<Point> = None;
    for &r in &sorted {
        let mut flag = String::new();
        let (normal, zeta) = match fit_slab(domain, [0.0, 0.0], r) {
            Ok(fit) => (fit.normal, fit.zeta),
            Err(e) => match last {
                Some(n) => {
                    flag = format!("normal_reused: {e}");
                    (n, f64::NAN)
                }
                None => return Err(e),
            },
        };
        last = Some(normal);
        let ex = excess_quantities(integ, normal, r)?;
        rows.push((r, ex, normal, zeta, flag));
    }
    let mut p = ScaleProfile {
        scales: Vec::new(),
        phi: Vec::new(),
        excess: Vec::new(),
        slope: Vec::new(),
        q: Vec::new(),
        normals: Vec::new(),
        zeta: Vec::new(),
        flags: Vec::new(),
    };
    // A reused normal borrows the flatness of the scale it came from.
    let mut prev_zeta = 0.0;
    for (r, ex, n, z, f) in rows {
        let z = if z.is_nan() { prev_zeta } else { z };
        prev_zeta = z;
        p.scales.push(r);
        p.phi.push(ex.phi);
        p.excess.push(ex.excess);
        p.slope.push(ex.slope);
        p.q.push(ex.q);
        p.normals.push(n);
        p.zeta.push(z);
        p.flags.push(f);
    }
    for v in [&mut p.scales, &mut p.phi, &mut p.excess, &mut p.slope, &mut p.zeta] {
        v.reverse();
    }
    p.q.reverse();
    p.normals.reverse();
    p.flags.reverse();
    Ok(p)
}

/// Geometric ladder `floor · ratio^k` up to and including `top`.
pub fn ladder(floor: f64, top: f64, ratio: f64) -> Vec<f64> {
    let n = ((top / floor).ln() / ratio.ln() + 1e-9).floor() as usize;
    (0..=n).map(|k| top / ratio.powi((n - k) as i32)).collect()
}
