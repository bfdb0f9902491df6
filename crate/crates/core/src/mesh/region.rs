use super::{BoundaryEdge, BoundaryTag, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{cross, dot, norm, segment_distance, sub, Point, RoughDomain, SlabFit};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::f64::consts::PI;

/// A bounded planar region to triangulate.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    /// `D ∩ B_radius(0)` for a domain with the origin on its boundary.
    DomainBall { domain: &'a RoughDomain, radius: f64 },
    /// `B_radius(center) ∩ {(x - center) . normal < level}`.
    HalfBall { center: Point, normal: Point, level: f64, radius: f64 },
    Ball { center: Point, radius: f64 },
    /// `[0, 1]^2` with periodic node pairing.
    UnitCell,
    Rectangle { min: Point, max: Point },
}

impl<'a> Region<'a> {
    /// `T^+` of a slab fit: the half-ball below the upper face of the slab.
    pub fn upper_slab(fit: &SlabFit) -> Region<'static> {
        Region::HalfBall { center: fit.center, normal: fit.normal, level: fit.upper_level(), radius: fit.r }
    }

    /// `T^-` of a slab fit.
    pub fn lower_slab(fit: &SlabFit) -> Region<'static> {
        Region::HalfBall { center: fit.center, normal: fit.normal, level: fit.lower_level(), radius: fit.r }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::DomainBall { domain, radius } => norm(p) < radius && domain.contains(p),
            Region::HalfBall { center, normal, level, radius } => {
                let d = sub(p, center);
                norm(d) < radius && dot(d, normal) < level
            }
            Region::Ball { center, radius } => norm(sub(p, center)) < radius,
            Region::UnitCell => p.iter().all(|&x| (0.0..=1.0).contains(&x)),
            Region::Rectangle { min, max } => (0..2).all(|k| p[k] >= min[k] && p[k] <= max[k]),
        }
    }

    /// Closed boundary polygon, counter-clockwise, with the tag of the
    /// segment starting at each vertex.
    fn polygon(&self, h: f64) -> Result<Vec<(Point, BoundaryTag)>> {
        let (center, radius, chain, tag) = match *self {
            Region::DomainBall { domain, radius } => {
                let chain = domain.boundary_chain(radius)?;
                ([0.0, 0.0], radius, simplify(&chain, h), BoundaryTag::Rough)
            }
            Region::HalfBall { center, normal, level, radius } => {
                if level.abs() >= radius {
                    return Err(Error::Meshing(format!("slab level {level} misses the ball of radius {radius}")));
                }
                let half = (radius * radius - level * level).sqrt();
                let dir = [-normal[1], normal[0]];
                let at = |s: f64| {
                    [center[0] + level * normal[0] + s * dir[0], center[1] + level * normal[1] + s * dir[1]]
                };
                let n = ((2.0 * half) / h).ceil().max(1.0) as usize;
                let chain: Vec<Point> = (0..=n).map(|k| at(-half + 2.0 * half * k as f64 / n as f64)).collect();
                (center, radius, chain, BoundaryTag::Slab)
            }
            Region::Ball { center, radius } => {
                let n = ((2.0 * PI * radius) / h).ceil().max(8.0) as usize;
                return Ok((0..n)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / n as f64;
                        ([center[0] + radius * th.cos(), center[1] + radius * th.sin()], BoundaryTag::Ball)
                    })
                    .collect());
            }
            Region::UnitCell | Region::Rectangle { .. } => unreachable!("structured regions have no polygon"),
        };
        let mut poly: Vec<(Point, BoundaryTag)> = chain.iter().map(|&p| (p, tag)).collect();
        let (s, e) = (sub(chain[0], center), sub(*chain.last().unwrap(), center));
        poly.last_mut().unwrap().1 = BoundaryTag::Ball;
        let a0 = e[1].atan2(e[0]);
        let delta = (s[1].atan2(s[0]) - a0).rem_euclid(2.0 * PI);
        let n = (delta * radius / h).ceil().max(2.0) as usize;
        for k in 1..n {
            let th = a0 + delta * k as f64 / n as f64;
            poly.push(([center[0] + radius * th.cos(), center[1] + radius * th.sin()], BoundaryTag::Ball));
        }
        Ok(poly)
    }
}

/// Douglas–Peucker with a maximal segment length, keeping points on the curve;
/// then drops interior vertices that would leave segments shorter than `h / 5`.
fn simplify(chain: &[Point], h: f64) -> Vec<Point> {
    let tol = 5e-3 * h;
    let mut keep = vec![false; chain.len()];
    keep[0] = true;
    keep[chain.len() - 1] = true;
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (mut far, mut dmax) = (a + 1, -1.0);
        for i in a + 1..b {
            let d = segment_distance(chain[i], chain[a], chain[b]);
            if d > dmax {
                dmax = d;
                far = i;
            }
        }
        let split = if dmax > tol {
            Some(far)
        } else if norm(sub(chain[b], chain[a])) > h {
            Some((a + b) / 2)
        } else {
            None
        };
        if let Some(m) = split {
            keep[m] = true;
            stack.push((a, m));
            stack.push((m, b));
        }
    }
    let kept: Vec<Point> = chain.iter().zip(&keep).filter(|(_, &k)| k).map(|(&p, _)| p).collect();
    let mut out = vec![kept[0]];
    for (i, &p) in kept.iter().enumerate().skip(1) {
        let last = i == kept.len() - 1;
        if norm(sub(p, *out.last().unwrap())) < 0.2 * h && !last {
            continue;
        }
        if last && out.len() > 1 && norm(sub(p, *out.last().unwrap())) < 0.2 * h {
            out.pop();
        }
        out.push(p);
    }
    out
}

/// Bucket grid over polygon segments for distance and nearest-segment queries.
struct SegmentGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentGrid {
    fn new(poly: &[Point], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in poly {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nx = ((hi[0] - lo[0]) / cell).floor() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).floor() as usize + 1;
        let mut g = SegmentGrid { origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (i0, j0) = g.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
            let (i1, j1) = g.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
            for j in j0..=j1 {
                for ii in i0..=i1 {
                    g.buckets[j * nx + ii].push(i as u32);
                }
            }
        }
        g
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Nearest segment within one cell of `p`, with its distance.
    fn nearest(&self, poly: &[Point], p: Point) -> Option<(usize, f64)> {
        let (ci, cj) = self.cell_of(p);
        let mut best: Option<(usize, f64)> = None;
        for j in cj.saturating_sub(1)..=(cj + 1).min(self.ny - 1) {
            for i in ci.saturating_sub(1)..=(ci + 1).min(self.nx - 1) {
                for &s in &self.buckets[j * self.nx + i] {
                    let s = s as usize;
                    let d = segment_distance(p, poly[s], poly[(s + 1) % poly.len()]);
                    if best.is_none_or(|b| d < b.1) {
                        best = Some((s, d));
                    }
                }
            }
        }
        best
    }
}

/// Triangulates `region` with element size about `h_target`.
///
/// Unstructured regions use a constrained Delaunay triangulation of the
/// boundary polygon and an equilateral lattice, refined to a 20 degree angle
/// bound and smoothed. Unit cells and rectangles are structured grids.
pub fn triangulate_region(region: &Region, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::Meshing(format!("h_target must be positive, got {h_target}")));
    }
    match *region {
        Region::UnitCell => return Ok(structured([0.0, 0.0], [1.0, 1.0], h_target, true)),
        Region::Rectangle { min, max } => {
            if !(max[0] > min[0] && max[1] > min[1]) {
                return Err(Error::Meshing("rectangle must have positive extent".into()));
            }
            return Ok(structured(min, max, h_target, false));
        }
        // Straight chains are meshed axis-aligned so that their vertices are exactly collinear.
        Region::HalfBall { center, normal, level, radius } if normal != [0.0, 1.0] => {
            let local = triangulate_region(&Region::HalfBall { center: [0.0, 0.0], normal: [0.0, 1.0], level, radius }, h_target)?;
            let (c, s) = (normal[1], normal[0]);
            return Ok(local.mapped(|p| [center[0] + c * p[0] + s * p[1], center[1] - s * p[0] + c * p[1]]));
        }
        Region::DomainBall { domain, radius } if domain.spec().rotation != 0.0 => {
            let upright = RoughDomain::new(domain.spec().clone().rotated(0.0), domain.epsilon())?;
            let local = triangulate_region(&Region::DomainBall { domain: &upright, radius }, h_target)?;
            return Ok(local.mapped(|p| domain.to_global(p)));
        }
        _ => {}
    }
    // Lattice spacing below h_target keeps boundary-adjacent elements within the bound.
    let h = 0.85 * h_target;
    let poly_tagged = region.polygon(h)?;
    let poly: Vec<Point> = poly_tagged.iter().map(|p| p.0).collect();
    let grid = SegmentGrid::new(&poly, h);

    let mut points: Vec<Point2<f64>> = poly.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((hi[1] - lo[1]) / dy).ceil() as i64;
    let cols = ((hi[0] - lo[0]) / h).ceil() as i64 + 1;
    for j in 0..=rows {
        let y = lo[1] + j as f64 * dy;
        let shift = if j % 2 == 0 { 0.0 } else { 0.5 * h };
        for i in 0..=cols {
            let p = [lo[0] + shift + i as f64 * h, y];
            if region.contains(p) && grid.nearest(&poly, p).is_none_or(|(_, d)| d >= 0.5 * h) {
                points.push(Point2::new(p[0], p[1]));
            }
        }
    }
    let n_poly = poly.len();
    let edges: Vec<[usize; 2]> = (0..n_poly).map(|i| [i, (i + 1) % n_poly]).collect();
    let mut conflicts = 0usize;
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(points, edges, |_| {
        conflicts += 1
    })
    .map_err(|e| Error::Meshing(format!("triangulation failed: {e:?}")))?;
    if conflicts > 0 {
        return Err(Error::Meshing(format!("{conflicts} boundary segments intersect")));
    }
    // Bisect interior edges longer than the target, then refine angles.
    let classify = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, angle: f64| -> Result<Vec<bool>> {
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .with_angle_limit(AngleLimit::from_deg(angle))
                .exclude_outer_faces(true)
                .with_max_additional_vertices(cdt.num_vertices() + 1000),
        );
        if !result.refinement_complete {
            return Err(Error::Meshing("angle refinement did not complete".into()));
        }
        let mut excluded = vec![false; cdt.num_all_faces()];
        for f in &result.excluded_faces {
            excluded[f.index()] = true;
        }
        Ok(excluded)
    };
    for _ in 0..12 {
        let mut long: Vec<Point2<f64>> = Vec::new();
        for e in cdt.undirected_edges() {
            let [a, b] = e.vertices();
            let (pa, pb) = (a.position(), b.position());
            if (pa.x - pb.x).hypot(pa.y - pb.y) <= h_target || e.is_constraint_edge() {
                continue;
            }
            let mid = [0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)];
            // The long side of a sliver has its midpoint on the opposite vertex, or the opposite vertex on the side.
            let len = (pa.x - pb.x).hypot(pa.y - pb.y);
            let d = e.as_directed();
            let near_opposite = [d, d.rev()].iter().any(|side| {
                side.face().as_inner().is_some() && {
                    let o = side.next().to().position();
                    let height = cross([pb.x - pa.x, pb.y - pa.y], [o.x - pa.x, o.y - pa.y]).abs() / len;
                    (o.x - mid[0]).hypot(o.y - mid[1]) < 0.25 * len || height < 1e-6 * len
                }
            });
            if region.contains(mid) && !near_opposite {
                long.push(Point2::new(mid[0], mid[1]));
            }
        }
        if long.is_empty() {
            break;
        }
        for p in long {
            cdt.insert(p).map_err(|e| Error::Meshing(format!("insertion failed: {e:?}")))?;
        }
    }
    let excluded = classify(&mut cdt, 20.0)?;

    let mut map = vec![u32::MAX; cdt.num_vertices()];
    let mut mesh = Mesh { h_target, ..Mesh::default() };
    let mut index = |k: usize, p: Point2<f64>, mesh: &mut Mesh| -> u32 {
        if map[k] == u32::MAX {
            map[k] = mesh.nodes.len() as u32;
            mesh.nodes.push([p.x, p.y]);
        }
        map[k]
    };
    let min_area = 1e-14 * h_target * h_target;
    let signed_area = |face: spade::handles::FaceHandle<'_, spade::handles::InnerTag, Point2<f64>, (), spade::CdtEdge<()>, ()>| {
        let t = face.vertices().map(|v| [v.position().x, v.position().y]);
        0.5 * cross(sub(t[1], t[0]), sub(t[2], t[0]))
    };
    // Collinear slivers left by splitting constraint edges count as outside, so their neighbours' edges get tags.
    let mut skip = excluded;
    for face in cdt.inner_faces() {
        if signed_area(face).abs() < min_area {
            skip[face.fix().index()] = true;
        }
    }
    for face in cdt.inner_faces() {
        if skip[face.fix().index()] {
            continue;
        }
        let [a, b, c] = face.vertices();
        let area = signed_area(face);
        let tri = [index(a.fix().index(), a.position(), &mut mesh), index(b.fix().index(), b.position(), &mut mesh), index(c.fix().index(), c.position(), &mut mesh)];
        mesh.triangles.push(if area > 0.0 { tri } else { [tri[0], tri[2], tri[1]] });
        for e in face.adjacent_edges() {
            let other = e.rev().face();
            let outside = match other.as_inner() {
                None => true,
                Some(f) => skip[f.fix().index()],
            };
            if outside {
                let (p, q) = (e.from(), e.to());
                let (pi, qi) = (index(p.fix().index(), p.position(), &mut mesh), index(q.fix().index(), q.position(), &mut mesh));
                let (pp, qp) = (mesh.nodes[pi as usize], mesh.nodes[qi as usize]);
                let mid = [0.5 * (pp[0] + qp[0]), 0.5 * (pp[1] + qp[1])];
                let tag = grid.nearest(&poly, mid).map(|(s, _)| poly_tagged[s].1).unwrap_or(BoundaryTag::Ball);
                mesh.boundary_edges.push(BoundaryEdge { nodes: [pi, qi], tag });
            }
        }
    }
    smooth(&mut mesh, h_target);
    Ok(mesh)
}

/// One pass of Laplacian smoothing on interior nodes, accepting a move only
/// if no incident triangle inverts or outgrows `h_max`, and the smallest
/// incident angle does not drop.
fn smooth(mesh: &mut Mesh, h_max: f64) {
    let mut on_boundary = vec![false; mesh.nodes.len()];
    for e in &mesh.boundary_edges {
        on_boundary[e.nodes[0] as usize] = true;
        on_boundary[e.nodes[1] as usize] = true;
    }
    let (start, items) = mesh.node_triangles();
    for v in 0..mesh.nodes.len() {
        if on_boundary[v] {
            continue;
        }
        let tris = &items[start[v] as usize..start[v + 1] as usize];
        let mut sum = [0.0, 0.0];
        let mut count = 0.0;
        for &t in tris {
            for &w in &mesh.triangles[t as usize] {
                if w as usize != v {
                    sum[0] += mesh.nodes[w as usize][0];
                    sum[1] += mesh.nodes[w as usize][1];
                    count += 1.0;
                }
            }
        }
        if count == 0.0 {
            continue;
        }
        let target = [sum[0] / count, sum[1] / count];
        let quality = |mesh: &Mesh| -> (f64, f64) {
            tris.iter().fold((180.0f64, 0.0f64), |(ang, diam), &t| {
                let t = t as usize;
                let a = if mesh.area(t) <= 0.0 { -1.0 } else { super::min_angle(mesh.triangle(t)) };
                (ang.min(a), diam.max(mesh.diameter(t)))
            })
        };
        let before = quality(mesh);
        let old = mesh.nodes[v];
        mesh.nodes[v] = target;
        let after = quality(mesh);
        if after.0 < before.0 || after.1 > before.1.max(h_max) {
            mesh.nodes[v] = old;
        }
    }
}

fn structured(min: Point, max: Point, h: f64, periodic: bool) -> Mesh {
    let nx = ((max[0] - min[0]) / h).ceil().max(1.0) as usize;
    let ny = ((max[1] - min[1]) / h).ceil().max(1.0) as usize;
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut mesh = Mesh { h_target: h, ..Mesh::default() };
    for j in 0..=ny {
        for i in 0..=nx {
            mesh.nodes.push([
                min[0] + (max[0] - min[0]) * i as f64 / nx as f64,
                min[1] + (max[1] - min[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            mesh.triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            mesh.triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let (lo_tag, hi_tag) = if periodic {
        (BoundaryTag::PeriodicMaster, BoundaryTag::PeriodicSlave)
    } else {
        (BoundaryTag::Ball, BoundaryTag::Ball)
    };
    for i in 0..nx {
        mesh.boundary_edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: lo_tag });
        mesh.boundary_edges.push(BoundaryEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: hi_tag });
    }
    for j in 0..ny {
        mesh.boundary_edges.push(BoundaryEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: hi_tag });
        mesh.boundary_edges.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: lo_tag });
    }
    if periodic {
        for j in 0..=ny {
            for i in 0..=nx {
                let (mi, mj) = (if i == nx { 0 } else { i }, if j == ny { 0 } else { j });
                if (mi, mj) != (i, j) {
                    mesh.periodic.push((id(i, j), id(mi, mj)));
                }
            }
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cell_at_h_32_has_2048_triangles() {
        let m = triangulate_region(&Region::UnitCell, 1.0 / 32.0).unwrap();
        assert_eq!(m.triangles.len(), 2048);
        assert_eq!(m.periodic.len(), 33 + 32);
        m.validate().unwrap();
    }

    #[test]
    fn ball_mesh_is_valid() {
        let m = triangulate_region(&Region::Ball { center: [0.3, -0.2], radius: 0.5 }, 0.05).unwrap();
        m.validate().unwrap();
        assert!(m.h_max() <= 0.05 + 1e-12, "{:?}", m.quality());
        assert!(m.min_angle_deg() >= 20.0 - 1e-9);
        let exact = PI * 0.25;
        assert!((m.total_area() - exact).abs() < 0.01 * exact);
    }
}
