use super::{dot, norm, sub, Point, RoughDomain};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const COARSE_ANGLES: usize = 512;
const MIN_SAMPLES: usize = 8;

/// Minimal slab containing the boundary samples in `B_r(center)`.
///
/// The strip is `{offset - halfwidth <= (x - center) . normal <= offset + halfwidth}`
/// and `normal` points out of the domain, so `T^- = B_r ∩ {(x-c).n < lower_level()}`
/// lies in the domain and `T^+ = B_r ∩ {(x-c).n < upper_level()}` contains it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabFit {
    pub center: Point,
    pub r: f64,
    pub normal: Point,
    pub halfwidth: f64,
    pub offset: f64,
    /// `halfwidth / r`.
    pub zeta: f64,
    /// Half-width of the thinnest strip with the same normal through `center`.
    pub centered_halfwidth: f64,
    /// Number of distinct optimal normals found.
    pub multiplicity: usize,
    pub samples: usize,
}

impl SlabFit {
    pub fn upper_level(&self) -> f64 {
        self.offset + self.halfwidth
    }

    pub fn lower_level(&self) -> f64 {
        self.offset - self.halfwidth
    }

    pub fn level(&self, x: Point) -> f64 {
        dot(sub(x, self.center), self.normal)
    }

    pub fn in_upper(&self, x: Point) -> bool {
        norm(sub(x, self.center)) < self.r && self.level(x) < self.upper_level()
    }

    pub fn in_lower(&self, x: Point) -> bool {
        norm(sub(x, self.center)) < self.r && self.level(x) < self.lower_level()
    }
}

fn strip(points: &[Point], center: Point, theta: f64) -> (f64, f64) {
    let n = [theta.cos(), theta.sin()];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        let v = dot(sub(p, center), n);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (0.5 * (hi - lo), 0.5 * (hi + lo))
}

fn golden(points: &[Point], center: Point, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| strip(points, center, t).0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-11 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Fits the minimal slab to explicit boundary samples. `inside` orients the normal.
pub fn fit_slab_points(
    points: &[Point],
    center: Point,
    r: f64,
    inside: impl Fn(Point) -> bool,
) -> Result<SlabFit> {
    if points.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSampling { r, found: points.len(), needed: MIN_SAMPLES });
    }
    let pi = std::f64::consts::PI;
    let widths: Vec<f64> = (0..COARSE_ANGLES)
        .map(|k| strip(points, center, pi * k as f64 / COARSE_ANGLES as f64).0)
        .collect();
    let mut minima: Vec<usize> = (0..COARSE_ANGLES)
        .filter(|&k| {
            let prev = widths[(k + COARSE_ANGLES - 1) % COARSE_ANGLES];
            let next = widths[(k + 1) % COARSE_ANGLES];
            widths[k] <= prev && widths[k] <= next
        })
        .collect();
    minima.sort_by(|&a, &b| widths[a].total_cmp(&widths[b]));
    minima.truncate(4);
    let dt = pi / COARSE_ANGLES as f64;
    let refined: Vec<(f64, f64)> = minima
        .iter()
        .map(|&k| {
            let t0 = pi * k as f64 / COARSE_ANGLES as f64;
            golden(points, center, t0 - dt, t0 + dt)
        })
        .collect();
    let &(theta, best) = refined
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::DegenerateScale { r, reason: "no width minimum".into() })?;
    let tol = best * 1e-9 + 1e-14 * r;
    let mut distinct: Vec<f64> = Vec::new();
    for &(t, w) in &refined {
        if w <= best + tol {
            let t = t.rem_euclid(pi);
            if distinct.iter().all(|&s| {
                let d = (s - t).abs();
                d.min(pi - d) > 2.0 * dt
            }) {
                distinct.push(t);
            }
        }
    }
    let (halfwidth, mut offset) = strip(points, center, theta);
    let mut normal = [theta.cos(), theta.sin()];

    // Orientation: below the strip is inside, above it is outside.
    let tangent = [-normal[1], normal[0]];
    let probe = |level: f64, j: f64| -> Option<Point> {
        let t = j * r / 4.0;
        (level * level + t * t < r * r).then(|| {
            [
                center[0] + level * normal[0] + t * tangent[0],
                center[1] + level * normal[1] + t * tangent[1],
            ]
        })
    };
    let below = 0.5 * (offset - halfwidth - r);
    let above = 0.5 * (offset + halfwidth + r);
    let (mut keep, mut flip) = (0, 0);
    for j in [-1.0, 0.0, 1.0] {
        if let Some(p) = probe(below, j) {
            if inside(p) { keep += 1 } else { flip += 1 }
        }
        if let Some(p) = probe(above, j) {
            if inside(p) { flip += 1 } else { keep += 1 }
        }
    }
    if flip > keep {
        normal = [-normal[0], -normal[1]];
        offset = -offset;
    }
    let centered_halfwidth = points
        .iter()
        .map(|&p| dot(sub(p, center), normal).abs())
        .fold(0.0, f64::max);
    Ok(SlabFit {
        center,
        r,
        normal,
        halfwidth,
        offset,
        zeta: halfwidth / r,
        centered_halfwidth,
        multiplicity: distinct.len().max(1),
        samples: points.len(),
    })
}

/// Fits the minimal slab to `∂D ∩ B_r(center)`.
pub fn fit_slab(domain: &RoughDomain, center: Point, r: f64) -> Result<SlabFit> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DegenerateScale { r, reason: "radius must be positive".into() });
    }
    let points = domain.boundary_samples(center, r);
    fit_slab_points(&points, center, r, |x| domain.contains(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusSample {
    pub r: f64,
    /// Flatness of the fitted slab at this scale.
    pub raw: f64,
    /// Upper envelope: `max_{rho <= r} rho * raw(rho) / r`.
    pub zeta: f64,
    pub normal: Point,
}

/// Flatness ζ(r, ε/r) across `scales`, enveloped so that `r ζ(r)` is nondecreasing.
pub fn empirical_modulus(domain: &RoughDomain, center: Point, scales: &[f64]) -> Result<Vec<ModulusSample>> {
    let mut fits = Vec::with_capacity(scales.len());
    for &r in scales {
        let fit = fit_slab(domain, center, r)?;
        if fit.zeta > 0.5 {
            return Err(Error::FlatnessTooLarge { r, zeta: fit.zeta });
        }
        fits.push(fit);
    }
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|&a, &b| scales[a].total_cmp(&scales[b]));
    let mut envelope = vec![0.0; scales.len()];
    let mut running: f64 = 0.0;
    for &i in &order {
        running = running.max(scales[i] * fits[i].zeta);
        envelope[i] = running / scales[i];
    }
    Ok(fits
        .into_iter()
        .zip(envelope)
        .map(|(f, zeta)| ModulusSample { r: f.r, raw: f.zeta, zeta, normal: f.normal })
        .collect())
}

/// Boundary roughness scale `ε* = ε ζ(ε, 1)`.
pub fn eps_star(domain: &RoughDomain) -> Result<f64> {
    let e = domain.epsilon();
    Ok(e * fit_slab(domain, [0.0, 0.0], e * (1.0 + 1e-9))?.zeta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalDrift {
    pub s: f64,
    pub r: f64,
    /// `|n_r - n_s|`.
    pub drift: f64,
    /// `r ζ(r, ε/r) / s`.
    pub bound: f64,
    /// `drift / bound`; zero when both vanish.
    pub ratio: f64,
}

/// Drift of fitted normals between nested scales `s <= r`.
pub fn normal_drift(domain: &RoughDomain, center: Point, pairs: &[(f64, f64)]) -> Result<Vec<NormalDrift>> {
    pairs
        .iter()
        .map(|&(s, r)| {
            if !(s > 0.0 && s <= r) {
                return Err(Error::Precondition(format!("normal drift needs 0 < s <= r, got s = {s}, r = {r}")));
            }
            let fr = fit_slab(domain, center, r)?;
            let fs = fit_slab(domain, center, s)?;
            let drift = norm(sub(fr.normal, fs.normal));
            let bound = r * fr.zeta / s;
            let ratio = if drift <= 1e-12 {
                0.0
            } else if bound > 0.0 {
                drift / bound
            } else {
                f64::INFINITY
            };
            Ok(NormalDrift { s, r, drift, bound, ratio })
        })
        .collect()
}

/// Empirical constant `C` in `|n_r - n_s| <= C r ζ(r) / s`.
pub fn drift_constant(records: &[NormalDrift]) -> f64 {
    records.iter().map(|d| d.ratio).fold(0.0, f64::max)
}
