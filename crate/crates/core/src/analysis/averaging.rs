use super::integrate::BallIntegrator;
use crate::error::{Error, Result};
use crate::geometry::{norm, sub, Point};
use crate::mesh::triangle_disk_area;
use std::f64::consts::PI;

/// Values on the nodes of a square sample grid restricted to a disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub spacing: f64,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    /// Grid points whose averaging ball left the ambient ball.
    pub skipped: Vec<Point>,
    /// Points where no admissible radius existed; their value is 0.
    pub flagged: Vec<usize>,
}

impl SampledField {
    /// `(mean over samples in B_r(c) of v^p)^{1/p}`, the grid quadrature of `fint_{B_r(c)}`.
    pub fn ball_mean(&self, c: Point, r: f64, p: f64) -> Result<f64> {
        let (mut s, mut n) = (0.0, 0usize);
        for (x, v) in self.points.iter().zip(&self.values) {
            if norm(sub(*x, c)) < r {
                s += v.powf(p);
                n += 1;
            }
        }
        let expected = PI * r * r / (self.spacing * self.spacing);
        if n == 0 || (n as f64) < 0.9 * expected {
            return Err(Error::Resolution(format!(
                "ball of radius {r} holds {n} samples of spacing {}, expected about {expected:.0}",
                self.spacing
            )));
        }
        Ok((s / n as f64).powf(1.0 / p))
    }
}

/// Square grid of spacing `h` through `center`, restricted to `B_radius(center)`.
pub fn sample_grid(center: Point, radius: f64, h: f64) -> Vec<Point> {
    let n = (radius / h).floor() as i64;
    let mut out = Vec::new();
    for j in -n..=n {
        for i in -n..=n {
            let x = [center[0] + i as f64 * h, center[1] + j as f64 * h];
            if norm(sub(x, center)) <= radius {
                out.push(x);
            }
        }
    }
    out
}

/// `M_t[F](x) = (fint_{B_t(x)} |F|^{p0})^{1/p0}` for per-triangle `F`, sampled on a grid of
/// spacing `t/4` over `B_radius(center)`. Points whose ball leaves the known region are skipped.
pub fn averaging_mt(integ: &BallIntegrator, values: &[f64], t: f64, p0: f64, center: Point, radius: f64) -> SampledField {
    averaging_mt_spaced(integ, values, t, p0, center, radius, t / 4.0)
}

/// [`averaging_mt`] on a grid of the given spacing, clamped to at most `t/4`.
pub fn averaging_mt_spaced(
    integ: &BallIntegrator,
    values: &[f64],
    t: f64,
    p0: f64,
    center: Point,
    radius: f64,
    spacing: f64,
) -> SampledField {
    let spacing = spacing.min(t / 4.0);
    let powered: Vec<f64> = if p0 == 1.0 { values.iter().map(|v| v.abs()).collect() } else { values.iter().map(|v| v.abs().powf(p0)).collect() };
    let n = (radius / spacing).floor() as i64;
    let (sums, cover) = lattice_disk_sums(integ, &powered, t, center, spacing, n);
    let side = (2 * n + 1) as usize;
    let full = PI * t * t;
    let mut points = Vec::new();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for j in -n..=n {
        for i in -n..=n {
            let x = [center[0] + i as f64 * spacing, center[1] + j as f64 * spacing];
            if norm(sub(x, center)) > radius {
                continue;
            }
            let k = (j + n) as usize * side + (i + n) as usize;
            let inside_extension = matches!(integ.field.extension, Some((c0, big)) if norm(sub(x, c0)) + t <= big * (1.0 + 1e-12));
            if !inside_extension && (cover[k] - full).abs() > 1e-6 * full {
                skipped.push(x);
                continue;
            }
            points.push(x);
            out.push((sums[k] / full).powf(1.0 / p0));
        }
    }
    SampledField { spacing, points, values: out, skipped, flagged: Vec::new() }
}

/// `Σ_T w_T |T ∩ B_t(x)|` and `Σ_T |T ∩ B_t(x)|` at lattice points `center + spacing (i, j)`,
/// `|i|, |j| ≤ n`, row-major from the lowest row.
///
/// Triangles are visited once: lattice points whose disk contains the whole triangle
/// form one interval per row and are filled through difference arrays, and only the
/// points whose circle crosses the triangle get an exact clipped area.
fn lattice_disk_sums(integ: &BallIntegrator, w: &[f64], t: f64, center: Point, spacing: f64, n: i64) -> (Vec<f64>, Vec<f64>) {
    let mesh = &integ.field.mesh;
    let side = (2 * n + 1) as usize;
    let mut sums = vec![0.0; side * side];
    let mut cover = vec![0.0; side * side];
    let mut dsum = vec![0.0; side * (side + 1)];
    let mut dcov = vec![0.0; side * (side + 1)];
    let t2 = t * t;
    let lat = |v: f64, c: f64| (v - c) / spacing;
    for tri_index in 0..mesh.triangles.len() {
        let tri = mesh.triangle(tri_index);
        let area = mesh.area(tri_index);
        let wt = w[tri_index];
        let (ymin, ymax) = (tri[0][1].min(tri[1][1]).min(tri[2][1]), tri[0][1].max(tri[1][1]).max(tri[2][1]));
        let (xmin, xmax) = (tri[0][0].min(tri[1][0]).min(tri[2][0]), tri[0][0].max(tri[1][0]).max(tri[2][0]));
        let j0 = (lat(ymin - t, center[1]).ceil() as i64).max(-n);
        let j1 = (lat(ymax + t, center[1]).floor() as i64).min(n);
        for j in j0..=j1 {
            let y = center[1] + j as f64 * spacing;
            let row = (j + n) as usize;
            // Points with every vertex within t: intersection of the vertex chords.
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
            for p in &tri {
                let dy = y - p[1];
                let h2 = t2 - dy * dy;
                if h2 < 0.0 {
                    a = f64::INFINITY;
                    break;
                }
                let h = h2.sqrt();
                a = a.max(p[0] - h);
                b = b.min(p[0] + h);
            }
            // Points within t of the triangle's bounding box.
            let dy = if y < ymin { ymin - y } else if y > ymax { y - ymax } else { 0.0 };
            let reach = (t2 - dy * dy).max(0.0).sqrt();
            let i_lo = (lat(xmin - reach, center[0]).ceil() as i64).max(-n);
            let i_hi = (lat(xmax + reach, center[0]).floor() as i64).min(n);
            if i_lo > i_hi {
                continue;
            }
            let (f_lo, f_hi) = if a <= b {
                ((lat(a, center[0]).ceil() as i64).max(i_lo), (lat(b, center[0]).floor() as i64).min(i_hi))
            } else {
                (i_hi + 1, i_hi)
            };
            if f_lo <= f_hi {
                let base = row * (side + 1);
                dsum[base + (f_lo + n) as usize] += wt * area;
                dsum[base + (f_hi + n) as usize + 1] -= wt * area;
                dcov[base + (f_lo + n) as usize] += area;
                dcov[base + (f_hi + n) as usize + 1] -= area;
            }
            let mut partial = |i: i64| {
                let x = [center[0] + i as f64 * spacing, y];
                let cut = triangle_disk_area(tri, x, t);
                let k = row * side + (i + n) as usize;
                sums[k] += wt * cut;
                cover[k] += cut;
            };
            if f_lo <= f_hi {
                (i_lo..f_lo).for_each(&mut partial);
                (f_hi + 1..=i_hi).for_each(&mut partial);
            } else {
                (i_lo..=i_hi).for_each(&mut partial);
            }
        }
    }
    for row in 0..side {
        let (mut rs, mut rc) = (0.0, 0.0);
        for i in 0..side {
            rs += dsum[row * (side + 1) + i];
            rc += dcov[row * (side + 1) + i];
            sums[row * side + i] += rs;
            cover[row * side + i] += rc;
        }
    }
    (sums, cover)
}

/// `sup` over radii `t 2^j` with `B_ρ(x) ⊂ B_R(c)` of `(fint_{B_ρ(x)} |F|^2)^{1/2}`, at `samples`.
/// Samples with no admissible radius get the value 0 and are flagged.
pub fn truncated_maximal(
    integ: &BallIntegrator,
    values: &[f64],
    t: f64,
    ball: (Point, f64),
    samples: &[Point],
    spacing: f64,
) -> Result<SampledField> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("truncated maximal function needs t > 0, got {t}")));
    }
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (c, big) = ball;
    let mut out = Vec::with_capacity(samples.len());
    let mut flagged = Vec::new();
    for (i, &x) in samples.iter().enumerate() {
        let room = big - norm(sub(x, c));
        let mut best: f64 = 0.0;
        let mut any = false;
        let mut rho = t;
        while rho <= room * (1.0 + 1e-12) {
            any = true;
            let s = integ.piecewise_constant(x, rho, |k| squares[k]);
            best = best.max((s / (PI * rho * rho)).sqrt());
            rho *= 2.0;
        }
        if !any {
            flagged.push(i);
        }
        out.push(best);
    }
    Ok(SampledField { spacing, points: samples.to_vec(), values: out, skipped: Vec::new(), flagged })
}

/// `|B_s(x) ∩ B_t(z)| / |B_s(x)|` minimised over `|z - x| ≤ t`, `s < t`: two unit disks at unit distance.
pub fn overlap_fraction() -> f64 {
    (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0) / PI
}

/// Constant in `M_t[F](x) ≤ C (fint_{B_s(x)} M_t[F]^{p0})^{1/p0}` for `s < t`.
pub fn overlap_constant(p0: f64) -> f64 {
    overlap_fraction().powf(-1.0 / p0)
}

/// Constant in `(fint_{B_s} M_t[F]^2)^{1/2} ≤ C (fint_{B_2s} |F|^2)^{1/2}` for `s > t`, `d = 2`.
pub const AVERAGED_L2_CONSTANT: f64 = 2.0;

/// `|B_8s| / |B_10s|`: `fint_{B_10s} M_t[F]^{p0} ≥ 0.64 fint_{B_8s} |F|^{p0}` for `s > t`.
pub const INNER_VOLUME_FRACTION: f64 = 0.64;
