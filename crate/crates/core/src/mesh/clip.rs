use crate::geometry::{add, cross, dot, norm, scale, sub, Point};
use std::f64::consts::PI;

/// Signed area of `B_r(0) ∩ triangle(0, a, b)`.
fn wedge_area(a: Point, b: Point, r: f64) -> f64 {
    let sector = |u: Point, v: Point| 0.5 * r * r * cross(u, v).atan2(dot(u, v));
    let d = sub(b, a);
    let qa = dot(d, d);
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * dot(a, d);
    let qc = dot(a, a) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return sector(a, b);
    }
    let s = disc.sqrt();
    let (t1, t2) = ((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa));
    if t2 <= 0.0 || t1 >= 1.0 {
        return sector(a, b);
    }
    let p1 = add(a, scale(d, t1.max(0.0)));
    let p2 = add(a, scale(d, t2.min(1.0)));
    sector(a, p1) + 0.5 * cross(p1, p2) + sector(p2, b)
}

/// Exact area of `triangle ∩ B_r(c)`, signed by the triangle orientation.
pub fn triangle_disk_area(tri: [Point; 3], c: Point, r: f64) -> f64 {
    let v = [sub(tri[0], c), sub(tri[1], c), sub(tri[2], c)];
    wedge_area(v[0], v[1], r) + wedge_area(v[1], v[2], r) + wedge_area(v[2], v[0], r)
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

fn contains_point(tri: [Point; 3], p: Point) -> bool {
    (0..3).all(|k| cross(sub(tri[(k + 1) % 3], tri[k]), sub(p, tri[k])) >= 0.0)
}

/// Convex polygon approximating `tri ∩ B_r(c)` for a counter-clockwise
/// triangle. Arcs are replaced by chords subtending at most `max_dtheta`.
pub fn clip_triangle_disk(tri: [Point; 3], c: Point, r: f64, max_dtheta: f64) -> Vec<Point> {
    let v = [sub(tri[0], c), sub(tri[1], c), sub(tri[2], c)];
    let r2 = r * r;
    let inside = |p: Point| dot(p, p) <= r2;
    if v.iter().all(|&p| inside(p)) {
        return tri.to_vec();
    }
    // Boundary walk; `true` marks a point after which the boundary follows the circle.
    let mut walk: Vec<(Point, bool)> = Vec::with_capacity(8);
    for k in 0..3 {
        let (a, b) = (v[k], v[(k + 1) % 3]);
        if inside(a) {
            walk.push((a, false));
        }
        let d = sub(b, a);
        let qa = dot(d, d);
        let qb = 2.0 * dot(a, d);
        let qc = dot(a, a) - r2;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa == 0.0 || (disc <= 0.0 && inside(a) == inside(b)) {
            continue;
        }
        let disc = disc.max(0.0);
        let s = disc.sqrt();
        let (t1, t2) = ((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa));
        // Crossings follow the vertex flags so entries and exits always alternate.
        match (inside(a), inside(b)) {
            (true, true) => {}
            (false, true) => walk.push((add(a, scale(d, t1.clamp(0.0, 1.0))), false)),
            (true, false) => walk.push((add(a, scale(d, t2.clamp(0.0, 1.0))), true)),
            (false, false) => {
                if t1 > 0.0 && t2 < 1.0 && t1 < t2 {
                    walk.push((add(a, scale(d, t1)), false));
                    walk.push((add(a, scale(d, t2)), true));
                }
            }
        }
    }
    let arc = |from: Point, to: Point, out: &mut Vec<Point>| {
        // Coincident exit and entry (a vertex on the circle) span no arc, not a full turn.
        if norm(sub(from, to)) <= 1e-9 * r {
            return;
        }
        let a0 = from[1].atan2(from[0]);
        let delta = (to[1].atan2(to[0]) - a0).rem_euclid(2.0 * PI);
        let n = (delta / max_dtheta).ceil().max(1.0) as usize;
        for j in 1..n {
            let th = a0 + delta * j as f64 / n as f64;
            out.push([r * th.cos(), r * th.sin()]);
        }
    };
    let mut poly = Vec::new();
    if walk.is_empty() {
        if contains_point(v, [0.0, 0.0]) {
            let n = (2.0 * PI / max_dtheta).ceil().max(8.0) as usize;
            for j in 0..n {
                let th = 2.0 * PI * j as f64 / n as f64;
                poly.push([r * th.cos(), r * th.sin()]);
            }
        }
    } else {
        for i in 0..walk.len() {
            let (p, exit) = walk[i];
            poly.push(p);
            if exit {
                arc(p, walk[(i + 1) % walk.len()].0, &mut poly);
            }
        }
    }
    poly.into_iter().map(|p| add(p, c)).collect()
}

/// Sutherland–Hodgman clip of `subject` by the convex counter-clockwise polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[k], clip[(k + 1) % clip.len()]);
        let e = sub(b, a);
        let side = |p: Point| cross(e, sub(p, a));
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (p, q) = (input[i], input[(i + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push(add(p, scale(sub(q, p), t)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_inside_triangle_has_full_area() {
        let tri = [[-10.0, -10.0], [10.0, -10.0], [0.0, 10.0]];
        assert!((triangle_disk_area(tri, [0.0, -2.0], 1.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn triangle_inside_disk_has_triangle_area() {
        let tri = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]];
        assert!((triangle_disk_area(tri, [0.0, 0.0], 1.0) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn quarter_disk_from_right_triangle() {
        let tri = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        assert!((triangle_disk_area(tri, [0.0, 0.0], 1.0) - PI / 4.0).abs() < 1e-12);
        let poly = clip_triangle_disk(tri, [0.0, 0.0], 1.0, 1e-3);
        assert!((polygon_area(&poly) - PI / 4.0).abs() < 1e-6);
    }

    #[test]
    fn vertex_on_circle_matches_exact_area() {
        let r = 2.0;
        for k in 0..400 {
            let th = 0.0157 * k as f64;
            let on = [r * th.cos(), r * th.sin()];
            let inward = [on[0] * 0.97, on[1] * 0.97];
            let tangent = [-th.sin() * 0.05, th.cos() * 0.05];
            for tri in [
                [inward, add(inward, tangent), on],
                [on, add(inward, tangent), add(on, scale(tangent, 2.0))],
                [sub(inward, tangent), add(on, scale(on, 0.01)), on],
            ] {
                let tri = if polygon_area(&tri) < 0.0 { [tri[0], tri[2], tri[1]] } else { tri };
                let poly = clip_triangle_disk(tri, [0.0, 0.0], r, 0.02);
                let exact = triangle_disk_area(tri, [0.0, 0.0], r);
                assert!((polygon_area(&poly) - exact).abs() < 1e-5, "k={k}: {} vs {exact}", polygon_area(&poly));
            }
        }
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        assert!((polygon_area(&clip_convex(&a, &b)) - 1.0).abs() < 1e-14);
    }
}
