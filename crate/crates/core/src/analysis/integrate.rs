use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, Point};
use crate::mesh::{barycentric, clip_triangle_disk, triangle_disk_area};
use crate::pde::DiscreteField;
use std::f64::consts::PI;

/// Largest arc angle replaced by one chord when clipping triangles to disks.
const ARC_STEP: f64 = 0.02;

/// Position of a triangle relative to a closed disk.
enum Cut {
    Inside,
    Outside,
    Partial,
}

fn classify(tri: [Point; 3], c: Point, r: f64) -> Cut {
    let r2 = r * r;
    let d = tri.map(|p| dot(sub(p, c), sub(p, c)));
    if d.iter().all(|&x| x <= r2) {
        return Cut::Inside;
    }
    let lo = [tri[0][0].min(tri[1][0]).min(tri[2][0]), tri[0][1].min(tri[1][1]).min(tri[2][1])];
    let hi = [tri[0][0].max(tri[1][0]).max(tri[2][0]), tri[0][1].max(tri[1][1]).max(tri[2][1])];
    let dx = (lo[0] - c[0]).max(c[0] - hi[0]).max(0.0);
    let dy = (lo[1] - c[1]).max(c[1] - hi[1]).max(0.0);
    if dx * dx + dy * dy > r2 {
        Cut::Outside
    } else {
        Cut::Partial
    }
}

/// Integrals of a P1 field and its piecewise-constant gradient over disks,
/// with the field's zero extension accounted for analytically.
pub struct BallIntegrator<'a> {
    pub field: &'a DiscreteField,
    /// `|∇u|` per triangle.
    pub grad_norm: Vec<f64>,
}

impl<'a> BallIntegrator<'a> {
    pub fn new(field: &'a DiscreteField) -> Self {
        BallIntegrator { grad_norm: field.gradient_norms(), field }
    }

    /// Fails unless `B_r(c)` lies where the field is known (mesh or extension zone).
    pub fn check_ball(&self, c: Point, r: f64) -> Result<()> {
        match self.field.extension {
            Some((c0, big)) if norm(sub(c, c0)) + r <= big * (1.0 + 1e-12) => Ok(()),
            _ => {
                let covered = self.covered_area(c, r);
                if (covered - PI * r * r).abs() <= 1e-6 * PI * r * r {
                    Ok(())
                } else {
                    Err(Error::Precondition(format!(
                        "ball B_{r}({:.4}, {:.4}) leaves the region where the field is defined",
                        c[0], c[1]
                    )))
                }
            }
        }
    }

    /// `Σ_T w_T |T ∩ B_r(c)|` over mesh triangles.
    pub fn piecewise_constant(&self, c: Point, r: f64, w: impl Fn(usize) -> f64) -> f64 {
        let mesh = &self.field.mesh;
        let mut acc = 0.0;
        self.for_candidates(c, r, |t| {
            let tri = mesh.triangle(t);
            let a = match classify(tri, c, r) {
                Cut::Inside => mesh.area(t),
                Cut::Outside => return,
                Cut::Partial => triangle_disk_area(tri, c, r),
            };
            acc += w(t) * a;
        });
        acc
    }

    /// `|D ∩ B_r(c)|` where `D` is the meshed region.
    pub fn covered_area(&self, c: Point, r: f64) -> f64 {
        self.piecewise_constant(c, r, |_| 1.0)
    }

    /// `∫_{B_r(c)} |∇u|^p`.
    pub fn grad_power(&self, c: Point, r: f64, p: f64) -> f64 {
        if p == 2.0 {
            self.piecewise_constant(c, r, |t| self.grad_norm[t] * self.grad_norm[t])
        } else if p == 1.0 {
            self.piecewise_constant(c, r, |t| self.grad_norm[t])
        } else {
            self.piecewise_constant(c, r, |t| self.grad_norm[t].powf(p))
        }
    }

    /// `∫_{B_r(c) ∩ D} f` for `f(t, x, u(x))` quadratic on each triangle, where
    /// `u(x)` holds the interpolated components. Exact on whole triangles;
    /// cut triangles use chords of at most `ARC_STEP` radians.
    pub fn quadratic(&self, c: Point, r: f64, mut f: impl FnMut(usize, Point, &[f64]) -> f64) -> f64 {
        let mesh = &self.field.mesh;
        let m = self.field.m;
        let vals = &self.field.values;
        let mut acc = 0.0;
        let mut u = [0.0; 3];
        let mut eval = |t: usize, b: [f64; 3], x: Point, u: &mut [f64; 3]| {
            let tri = mesh.triangles[t];
            for comp in 0..m {
                u[comp] = (0..3).map(|k| b[k] * vals[tri[k] as usize * m + comp]).sum();
            }
            f(t, x, &u[..m])
        };
        self.for_candidates(c, r, |t| {
            let tri = mesh.triangle(t);
            match classify(tri, c, r) {
                Cut::Outside => {}
                Cut::Inside => {
                    let area = mesh.area(t);
                    let mut s = 0.0;
                    for k in 0..3 {
                        let (a, b) = (tri[k], tri[(k + 1) % 3]);
                        let mut bary = [0.0; 3];
                        bary[k] = 0.5;
                        bary[(k + 1) % 3] = 0.5;
                        s += eval(t, bary, [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0], &mut u);
                    }
                    acc += area * s / 3.0;
                }
                Cut::Partial => {
                    let poly = clip_triangle_disk(tri, c, r, ARC_STEP);
                    if poly.len() < 3 {
                        return;
                    }
                    for k in 1..poly.len() - 1 {
                        let sub_tri = [poly[0], poly[k], poly[k + 1]];
                        let area = 0.5
                            * ((sub_tri[1][0] - sub_tri[0][0]) * (sub_tri[2][1] - sub_tri[0][1])
                                - (sub_tri[2][0] - sub_tri[0][0]) * (sub_tri[1][1] - sub_tri[0][1]));
                        if area <= 0.0 {
                            continue;
                        }
                        let mut s = 0.0;
                        for j in 0..3 {
                            let (a, b) = (sub_tri[j], sub_tri[(j + 1) % 3]);
                            let x = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                            s += eval(t, barycentric(tri, x), x, &mut u);
                        }
                        acc += area * s / 3.0;
                    }
                }
            }
        });
        acc
    }

    fn for_candidates(&self, c: Point, r: f64, f: impl FnMut(usize)) {
        let mesh = &self.field.mesh;
        let (lo, hi) = mesh.bounding_box();
        if c[0] - r <= lo[0] && c[1] - r <= lo[1] && c[0] + r >= hi[0] && c[1] + r >= hi[1] {
            (0..mesh.triangles.len()).for_each(f);
        } else {
            self.field.grid().unique_candidates([c[0] - r, c[1] - r], [c[0] + r, c[1] + r], f);
        }
    }

    /// `(fint_{B_r(c)} |∇u|^p)^{1/p}` with the zero extension.
    pub fn ball_grad_mean(&self, c: Point, r: f64, p: f64) -> Result<f64> {
        self.check_ball(c, r)?;
        Ok((self.grad_power(c, r, p) / (PI * r * r)).powf(1.0 / p))
    }

    /// `(fint_{B_r(c)} |u|^2)^{1/2}` with the zero extension.
    pub fn ball_l2_mean(&self, c: Point, r: f64) -> Result<f64> {
        self.check_ball(c, r)?;
        Ok((self.quadratic(c, r, |_, _, u| u.iter().map(|v| v * v).sum()) / (PI * r * r)).max(0.0).sqrt())
    }
}
