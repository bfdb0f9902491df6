//! Epsilon-scale flat domains: boundary profiles, sampling, slab fitting and
//! flatness moduli.

mod modulus;
mod slab;

pub use modulus::{
    check_admissible, AdmissibilityGrid, AdmissibilityReport, ModulusFn, ModulusKind, Verdict,
};
pub use slab::{
    drift_constant, empirical_modulus, eps_star, fit_slab, fit_slab_points, normal_drift,
    ModulusSample, NormalDrift, SlabFit,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 { (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm(sub(p, add(a, scale(ab, t))))
}

/// Parameter `t` in `[0, 1]` where the segment from `a` (inside) to `b`
/// (outside) crosses the circle of radius `r` about the origin.
pub fn circle_exit(a: Point, b: Point, r: f64) -> f64 {
    let d = sub(b, a);
    let qa = dot(d, d);
    let qb = 2.0 * dot(a, d);
    let qc = dot(a, a) - r * r;
    if qa == 0.0 {
        return 0.0;
    }
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0)
}

/// A one-dimensional boundary profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Zero,
    /// `amplitude * dist(s + phase, Z)`.
    Sawtooth {
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude * sin(2 pi (s + phase))`.
    Sine {
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `coefficient * |s|^exponent`.
    Power { coefficient: f64, exponent: f64 },
    /// Piecewise linear through `values[k]` at `s = k / n`, extended with period 1.
    Tabulated { values: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Sawtooth { amplitude, phase } => {
                let x = s + phase;
                amplitude * (x - x.round()).abs()
            }
            Profile::Sine { amplitude, phase } => {
                amplitude * (2.0 * std::f64::consts::PI * (s + phase)).sin()
            }
            Profile::Power { coefficient, exponent } => coefficient * s.abs().powf(*exponent),
            Profile::Tabulated { values } => {
                let n = values.len() as f64;
                let x = (s - s.floor()) * n;
                let k = (x.floor() as usize).min(values.len() - 1);
                let f = x - k as f64;
                values[k] * (1.0 - f) + values[(k + 1) % values.len()] * f
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        match self {
            Profile::Power { coefficient, .. } => *coefficient == 0.0,
            _ => true,
        }
    }

    /// Points in `[a, b]` where the profile fails to be smooth.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let lattice = |spacing: f64, shift: f64| -> Vec<f64> {
            let k0 = ((a + shift) / spacing).ceil() as i64;
            let k1 = ((b + shift) / spacing).floor() as i64;
            (k0..=k1).map(|k| k as f64 * spacing - shift).collect()
        };
        match self {
            Profile::Sawtooth { phase, .. } => lattice(0.5, *phase),
            Profile::Tabulated { values } => lattice(1.0 / values.len() as f64, 0.0),
            Profile::Power { .. } if a <= 0.0 && b >= 0.0 => vec![0.0],
            _ => Vec::new(),
        }
    }

    fn validate(&self, name: &str, periodic: bool) -> Result<()> {
        let finite = match self {
            Profile::Zero => true,
            Profile::Sawtooth { amplitude, phase } | Profile::Sine { amplitude, phase } => {
                amplitude.is_finite() && phase.is_finite()
            }
            Profile::Power { coefficient, exponent } => {
                coefficient.is_finite() && exponent.is_finite() && *exponent > 0.0
            }
            Profile::Tabulated { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        };
        if !finite {
            return Err(Error::MalformedSpec(format!("{name} has non-finite or empty parameters")));
        }
        if periodic && !self.is_periodic() {
            return Err(Error::MalformedSpec(format!(
                "{name} must be bounded and 1-periodic, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Shape of the boundary near the anchor point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// `{x2 < 0}`.
    HalfPlane,
    /// `{x2 < psi0(x1) + eps psi1(x1 / eps)}`, shifted so the origin lies on the boundary.
    Graph {
        #[serde(default)]
        macro_profile: Profile,
        micro_profile: Profile,
    },
    /// Disk of the given radius centred at `(0, -radius)`.
    Disk { radius: f64 },
    /// Closed simple polygon with the origin on its boundary.
    Polygon { vertices: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub boundary: BoundarySpec,
    /// Counter-clockwise rotation in radians applied about the origin.
    #[serde(default)]
    pub rotation: f64,
}

impl DomainSpec {
    pub fn half_plane() -> Self {
        DomainSpec { boundary: BoundarySpec::HalfPlane, rotation: 0.0 }
    }

    /// Sawtooth graph `x2 < amplitude * eps * dist(x1 / eps, Z)`.
    pub fn sawtooth(amplitude: f64) -> Self {
        DomainSpec {
            boundary: BoundarySpec::Graph {
                macro_profile: Profile::Zero,
                micro_profile: Profile::Sawtooth { amplitude, phase: 0.0 },
            },
            rotation: 0.0,
        }
    }

    pub fn disk(radius: f64) -> Self {
        DomainSpec { boundary: BoundarySpec::Disk { radius }, rotation: 0.0 }
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        self.rotation = angle;
        self
    }
}

/// An open planar domain with the origin on its boundary, at micro-scale `epsilon`.
#[derive(Clone, Debug)]
pub struct RoughDomain {
    spec: DomainSpec,
    epsilon: f64,
    shift: f64,
    cos: f64,
    sin: f64,
    polygon: Vec<Point>,
}

impl RoughDomain {
    pub fn new(spec: DomainSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::MalformedSpec(format!("epsilon must be positive, got {epsilon}")));
        }
        if !spec.rotation.is_finite() {
            return Err(Error::MalformedSpec("rotation must be finite".into()));
        }
        let mut shift = 0.0;
        let mut polygon = Vec::new();
        match &spec.boundary {
            BoundarySpec::HalfPlane => {}
            BoundarySpec::Graph { macro_profile, micro_profile } => {
                macro_profile.validate("macro profile psi0", false)?;
                micro_profile.validate("micro profile psi1", true)?;
                shift = macro_profile.eval(0.0) + epsilon * micro_profile.eval(0.0);
            }
            BoundarySpec::Disk { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::MalformedSpec(format!("disk radius must be positive, got {radius}")));
                }
            }
            BoundarySpec::Polygon { vertices } => {
                if vertices.len() < 3 || vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::MalformedSpec("polygon needs at least 3 finite vertices".into()));
                }
                polygon = vertices.clone();
                let area2: f64 = (0..polygon.len())
                    .map(|i| cross(polygon[i], polygon[(i + 1) % polygon.len()]))
                    .sum();
                if area2 == 0.0 {
                    return Err(Error::MalformedSpec("polygon has zero area".into()));
                }
                if area2 < 0.0 {
                    polygon.reverse();
                }
                let n = polygon.len();
                let on_boundary = (0..n)
                    .any(|i| segment_distance([0.0, 0.0], polygon[i], polygon[(i + 1) % n]) < 1e-12);
                if !on_boundary {
                    return Err(Error::MalformedSpec("polygon boundary must pass through the origin".into()));
                }
            }
        }
        Ok(RoughDomain {
            cos: spec.rotation.cos(),
            sin: spec.rotation.sin(),
            spec,
            epsilon,
            shift,
            polygon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    fn to_local(&self, x: Point) -> Point {
        [self.cos * x[0] + self.sin * x[1], -self.sin * x[0] + self.cos * x[1]]
    }

    pub(crate) fn to_global(&self, y: Point) -> Point {
        [self.cos * y[0] - self.sin * y[1], self.sin * y[0] + self.cos * y[1]]
    }

    /// Boundary height in the unrotated frame of a graph-like domain.
    fn height(&self, s: f64) -> f64 {
        match &self.spec.boundary {
            BoundarySpec::Graph { macro_profile, micro_profile } => {
                macro_profile.eval(s) + self.epsilon * micro_profile.eval(s / self.epsilon) - self.shift
            }
            _ => 0.0,
        }
    }

    /// Kinks of a graph-like boundary in the unrotated frame, within `[a, b]`.
    fn height_breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.spec.boundary {
            BoundarySpec::Graph { macro_profile, micro_profile } => {
                let mut out = macro_profile.breakpoints(a, b);
                let e = self.epsilon;
                out.extend(micro_profile.breakpoints(a / e, b / e).into_iter().map(|s| s * e));
                out
            }
            _ => Vec::new(),
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, x: Point) -> bool {
        let y = self.to_local(x);
        match &self.spec.boundary {
            BoundarySpec::HalfPlane => y[1] < 0.0,
            BoundarySpec::Graph { .. } => y[1] < self.height(y[0]),
            BoundarySpec::Disk { radius } => y[0].hypot(y[1] + radius) < *radius,
            BoundarySpec::Polygon { .. } => {
                let p = &self.polygon;
                let mut inside = false;
                let mut j = p.len() - 1;
                for i in 0..p.len() {
                    let (a, b) = (p[i], p[j]);
                    if (a[1] > y[1]) != (b[1] > y[1])
                        && y[0] < (b[0] - a[0]) * (y[1] - a[1]) / (b[1] - a[1]) + a[0]
                    {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Boundary sampling step used at ball radius `r`.
    pub fn sample_step(&self, r: f64) -> f64 {
        (self.epsilon / 32.0).min(r / 512.0)
    }

    /// Samples of the boundary inside the closed ball `B_r(center)`.
    pub fn boundary_samples(&self, center: Point, r: f64) -> Vec<Point> {
        let step = self.sample_step(r);
        let c = self.to_local(center);
        let keep = |y: Point| (y[0] - c[0]).hypot(y[1] - c[1]) <= r * (1.0 + 1e-12);
        let mut local = Vec::new();
        match &self.spec.boundary {
            BoundarySpec::HalfPlane | BoundarySpec::Graph { .. } => {
                let (a, b) = (c[0] - r, c[0] + r);
                let mut xs: Vec<f64> = ((a / step).ceil() as i64..=(b / step).floor() as i64)
                    .map(|k| k as f64 * step)
                    .collect();
                xs.extend(self.height_breakpoints(a, b));
                xs.sort_by(f64::total_cmp);
                xs.dedup_by(|p, q| (*p - *q).abs() < 1e-15 * step);
                local.extend(xs.into_iter().map(|s| [s, self.height(s)]).filter(|&y| keep(y)));
            }
            BoundarySpec::Disk { radius } => {
                let rad = *radius;
                let c0 = [0.0, -rad];
                let d = norm(sub(c, c0));
                let dtheta = step / rad;
                let (theta0, half) = if d < 1e-300 {
                    (0.0, std::f64::consts::PI)
                } else {
                    let cosmax = (rad * rad + d * d - r * r) / (2.0 * rad * d);
                    if cosmax > 1.0 {
                        return Vec::new();
                    }
                    ((c[1] - c0[1]).atan2(c[0] - c0[0]), cosmax.max(-1.0).acos())
                };
                let n = (half / dtheta).ceil() as i64;
                for k in -n..=n {
                    let th = theta0 + k as f64 * dtheta;
                    let y = [c0[0] + rad * th.cos(), c0[1] + rad * th.sin()];
                    if keep(y) {
                        local.push(y);
                    }
                }
            }
            BoundarySpec::Polygon { .. } => {
                let p = &self.polygon;
                for i in 0..p.len() {
                    let (a, b) = (p[i], p[(i + 1) % p.len()]);
                    if segment_distance(c, a, b) > r {
                        continue;
                    }
                    let len = norm(sub(b, a));
                    let n = (len / step).ceil().max(1.0) as usize;
                    for k in 0..n {
                        let y = add(a, scale(sub(b, a), k as f64 / n as f64));
                        if keep(y) {
                            local.push(y);
                        }
                    }
                }
            }
        }
        local.into_iter().map(|y| self.to_global(y)).collect()
    }

    /// The boundary arc inside `B_r(0)` as a polyline from its first to its
    /// last crossing of the circle, oriented with the domain on the left.
    /// The endpoints lie on the circle.
    pub fn boundary_chain(&self, r: f64) -> Result<Vec<Point>> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Geometry(format!("chain radius must be positive, got {r}")));
        }
        let step = self.sample_step(r);
        let local = match &self.spec.boundary {
            BoundarySpec::HalfPlane | BoundarySpec::Graph { .. } => {
                let curve = |s: f64| [s, self.height(s)];
                let crossing = |dir: f64| -> f64 {
                    let mut k = 1i64;
                    while norm(curve(dir * k as f64 * step)) <= r {
                        k += 1;
                    }
                    let (mut lo, mut hi) = ((k - 1) as f64 * step, k as f64 * step);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if norm(curve(dir * mid)) <= r {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo <= 1e-15 * r {
                            break;
                        }
                    }
                    dir * 0.5 * (lo + hi)
                };
                let (right, left) = (crossing(1.0), crossing(-1.0));
                let mut xs: Vec<f64> = ((left / step).floor() as i64 + 1..=(right / step).ceil() as i64 - 1)
                    .map(|k| k as f64 * step)
                    .filter(|&s| s > left && s < right)
                    .collect();
                xs.extend(self.height_breakpoints(left, right).into_iter().filter(|&s| s > left && s < right));
                xs.sort_by(|a, b| b.total_cmp(a));
                xs.dedup_by(|p, q| (*p - *q).abs() < 1e-12 * step);
                let mut pts = vec![curve(right)];
                pts.extend(xs.into_iter().map(curve));
                pts.push(curve(left));
                for p in pts.iter_mut() {
                    let len = norm(*p);
                    if (len - r).abs() < 1e-9 * r {
                        *p = scale(*p, r / len);
                    }
                }
                pts
            }
            BoundarySpec::Disk { radius } => {
                let rad = *radius;
                if r >= 2.0 * rad {
                    return Err(Error::Geometry(format!("ball of radius {r} contains the whole disk")));
                }
                let half = (1.0 - r * r / (2.0 * rad * rad)).clamp(-1.0, 1.0).acos();
                let n = ((2.0 * half * rad) / step).ceil().max(2.0) as usize;
                let start = std::f64::consts::FRAC_PI_2 - half;
                (0..=n)
                    .map(|k| {
                        let th = start + 2.0 * half * k as f64 / n as f64;
                        [rad * th.cos(), rad * th.sin() - rad]
                    })
                    .collect()
            }
            BoundarySpec::Polygon { .. } => self.polygon_chain(r)?,
        };
        Ok(local.into_iter().map(|y| self.to_global(y)).collect())
    }

    fn polygon_chain(&self, r: f64) -> Result<Vec<Point>> {
        let p = &self.polygon;
        let n = p.len();
        let k = (0..n)
            .find(|&i| segment_distance([0.0, 0.0], p[i], p[(i + 1) % n]) < 1e-12)
            .expect("origin on boundary is validated at construction");
        let walk = |forward: bool| -> Result<Vec<Point>> {
            let mut out = Vec::new();
            let mut prev = [0.0, 0.0];
            for j in 0..=n {
                let idx = if forward { (k + 1 + j) % n } else { (k + n - j) % n };
                let v = p[idx];
                if norm(v) > r {
                    let t = circle_exit(prev, v, r);
                    out.push(add(prev, scale(sub(v, prev), t)));
                    return Ok(out);
                }
                if norm(v) > 1e-12 {
                    out.push(v);
                }
                prev = v;
            }
            Err(Error::Geometry(format!("polygon lies inside the ball of radius {r}")))
        };
        let fwd = walk(true)?;
        let mut back = walk(false)?;
        back.reverse();
        back.push([0.0, 0.0]);
        back.extend(fwd);
        Ok(back)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sawtooth_profile_is_distance_to_integers() {
        let p = Profile::Sawtooth { amplitude: 1.0, phase: 0.0 };
        assert_eq!(p.eval(0.0), 0.0);
        assert!((p.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((p.eval(1.25) - 0.25).abs() < 1e-15);
        assert_eq!(p.breakpoints(-0.6, 0.6), vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn nonperiodic_micro_profile_is_rejected_by_name() {
        let spec = DomainSpec {
            boundary: BoundarySpec::Graph {
                macro_profile: Profile::Zero,
                micro_profile: Profile::Power { coefficient: 1.0, exponent: 2.0 },
            },
            rotation: 0.0,
        };
        let err = RoughDomain::new(spec, 0.1).unwrap_err().to_string();
        assert!(err.contains("psi1"), "{err}");
    }

    #[test]
    fn graph_is_shifted_to_pass_through_origin() {
        let spec = DomainSpec {
            boundary: BoundarySpec::Graph {
                macro_profile: Profile::Zero,
                micro_profile: Profile::Sawtooth { amplitude: 1.0, phase: 0.25 },
            },
            rotation: 0.0,
        };
        let d = RoughDomain::new(spec, 0.1).unwrap();
        assert!(d.contains([0.0, -1e-9]));
        assert!(!d.contains([0.0, 1e-9]));
    }

    #[test]
    fn chain_endpoints_lie_on_circle() {
        let d = RoughDomain::new(DomainSpec::sawtooth(1.0).rotated(0.3), 0.1).unwrap();
        let c = d.boundary_chain(0.7).unwrap();
        for p in [c[0], *c.last().unwrap()] {
            assert!((norm(p) - 0.7).abs() < 1e-9);
        }
        // Domain on the left: the left normal of the first step points inside.
        let t = sub(c[2], c[1]);
        let mid = scale(add(c[1], c[2]), 0.5);
        let inward = add(mid, scale([-t[1], t[0]], 1e-3));
        assert!(d.contains(inward));
    }

    #[test]
    fn polygon_chain_passes_through_origin() {
        let spec = DomainSpec {
            boundary: BoundarySpec::Polygon {
                vertices: vec![[-3.0, 0.0], [-3.0, -3.0], [3.0, -3.0], [3.0, 0.0]],
            },
            rotation: 0.0,
        };
        let d = RoughDomain::new(spec, 0.1).unwrap();
        let c = d.boundary_chain(1.0).unwrap();
        assert!((c[0][0] - 1.0).abs() < 1e-12 && (c.last().unwrap()[0] + 1.0).abs() < 1e-12);
        assert!(d.contains([0.2, -0.1]) && !d.contains([0.2, 0.1]));
    }
}
