//! Conforming triangulations of balls, half-balls and unit cells, with tagged
//! boundary edges.

mod clip;
mod locate;
mod region;

pub use clip::{clip_convex, clip_triangle_disk, polygon_area, triangle_disk_area};
pub use locate::{barycentric, TriangleGrid};
pub use region::{triangulate_region, Region};

use crate::error::{Error, Result};
use crate::geometry::{cross, norm, sub, Point};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// The rough boundary `∂D`.
    Rough,
    /// The flat side of a half-ball.
    Slab,
    /// The outer circle.
    Ball,
    /// Cell faces `y1 = 0` or `y2 = 0`.
    PeriodicMaster,
    /// Cell faces `y1 = 1` or `y2 = 1`.
    PeriodicSlave,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Rough => "rough",
            BoundaryTag::Slab => "slab",
            BoundaryTag::Ball => "ball",
            BoundaryTag::PeriodicMaster => "periodic_master",
            BoundaryTag::PeriodicSlave => "periodic_slave",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rough" => BoundaryTag::Rough,
            "slab" => BoundaryTag::Slab,
            "ball" => BoundaryTag::Ball,
            "periodic_master" => BoundaryTag::PeriodicMaster,
            "periodic_slave" => BoundaryTag::PeriodicSlave,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [u32; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[u32; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `(slave, master)` node pairs identified by periodicity.
    pub periodic: Vec<(u32, u32)>,
    pub h_target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshQuality {
    pub nodes: usize,
    pub triangles: usize,
    pub h_max: f64,
    pub min_angle_deg: f64,
    pub area: f64,
}

impl Mesh {
    /// The same mesh with every node moved by an orientation-preserving map.
    pub fn mapped(mut self, f: impl Fn(Point) -> Point) -> Mesh {
        self.nodes.iter_mut().for_each(|p| *p = f(*p));
        self
    }

    pub fn triangle(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a as usize], self.nodes[b as usize], self.nodes[c as usize]]
    }

    /// Signed area, positive for counter-clockwise triangles.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        0.5 * cross(sub(b, a), sub(c, a))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        norm(sub(a, b)).max(norm(sub(b, c))).max(norm(sub(c, a)))
    }

    pub fn h_max(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len()).map(|t| min_angle(self.triangle(t))).fold(180.0, f64::min)
    }

    pub fn quality(&self) -> MeshQuality {
        MeshQuality {
            nodes: self.nodes.len(),
            triangles: self.triangles.len(),
            h_max: self.h_max(),
            min_angle_deg: self.min_angle_deg(),
            area: self.total_area(),
        }
    }

    /// Per-node boundary tag; nodes on several tags take the first in
    /// `Rough, Slab, Ball, PeriodicMaster, PeriodicSlave` order.
    pub fn node_tags(&self) -> Vec<Option<BoundaryTag>> {
        let mut tags: Vec<Option<BoundaryTag>> = vec![None; self.nodes.len()];
        for e in &self.boundary_edges {
            for &n in &e.nodes {
                let slot = &mut tags[n as usize];
                *slot = Some(match *slot {
                    Some(t) if t <= e.tag => t,
                    _ => e.tag,
                });
            }
        }
        tags
    }

    /// Checks orientation, edge manifoldness and that the tagged edges are
    /// exactly the edges with a single incident triangle.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len() as u32;
        let mut count: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Meshing(format!("triangle {t} references a missing node")));
            }
            if self.area(t) <= 0.0 {
                return Err(Error::Meshing(format!("triangle {t} is degenerate or inverted")));
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, _)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Meshing(format!("edge {e:?} is shared by more than two triangles")));
        }
        let tagged: std::collections::HashSet<(u32, u32)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])))
            .collect();
        for (e, &c) in &count {
            if c == 1 && !tagged.contains(e) {
                return Err(Error::Meshing(format!("boundary edge {e:?} has no tag")));
            }
        }
        if let Some(e) = tagged.iter().find(|e| count.get(e) != Some(&1)) {
            return Err(Error::Meshing(format!("tagged edge {e:?} is not on the boundary")));
        }
        Ok(())
    }

    /// Writes `nodes N triangles M`, the coordinates, the vertex triples,
    /// then `boundary_edges E` and one `i j tag` line per edge.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "nodes {} triangles {}", self.nodes.len(), self.triangles.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary_edges {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.name())?;
        }
        writeln!(w, "periodic {}", self.periodic.len())?;
        for (s, m) in &self.periodic {
            writeln!(w, "{s} {m}")?;
        }
        writeln!(w, "h_target {:.16e}", self.h_target)?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Mesh> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "<mesh>".into(),
            line: line + 1,
            column: 1,
            message: msg.to_string(),
        };
        let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
        let mut i = 0;
        let next = |i: &mut usize| -> Result<Vec<String>> {
            let l = lines.get(*i).ok_or_else(|| bad(*i, "unexpected end of mesh file"))?;
            *i += 1;
            Ok(l.split_whitespace().map(str::to_string).collect())
        };
        let num = |s: &str, line: usize| -> Result<f64> { s.parse().map_err(|_| bad(line, "bad number")) };
        let head = next(&mut i)?;
        if head.len() != 4 || head[0] != "nodes" || head[2] != "triangles" {
            return Err(bad(0, "expected `nodes N triangles M`"));
        }
        let (nn, nt) = (num(&head[1], 0)? as usize, num(&head[3], 0)? as usize);
        let mut mesh = Mesh::default();
        for _ in 0..nn {
            let f = next(&mut i)?;
            if f.len() != 2 {
                return Err(bad(i - 1, "expected two coordinates"));
            }
            mesh.nodes.push([num(&f[0], i - 1)?, num(&f[1], i - 1)?]);
        }
        for _ in 0..nt {
            let f = next(&mut i)?;
            if f.len() != 3 {
                return Err(bad(i - 1, "expected three indices"));
            }
            mesh.triangles
                .push([num(&f[0], i - 1)? as u32, num(&f[1], i - 1)? as u32, num(&f[2], i - 1)? as u32]);
        }
        let f = next(&mut i)?;
        let ne = num(f.get(1).ok_or_else(|| bad(i - 1, "expected `boundary_edges E`"))?, i - 1)? as usize;
        for _ in 0..ne {
            let f = next(&mut i)?;
            if f.len() != 3 {
                return Err(bad(i - 1, "expected `i j tag`"));
            }
            let tag = BoundaryTag::parse(&f[2]).ok_or_else(|| bad(i - 1, "unknown boundary tag"))?;
            mesh.boundary_edges
                .push(BoundaryEdge { nodes: [num(&f[0], i - 1)? as u32, num(&f[1], i - 1)? as u32], tag });
        }
        let f = next(&mut i)?;
        let np = num(f.get(1).ok_or_else(|| bad(i - 1, "expected `periodic P`"))?, i - 1)? as usize;
        for _ in 0..np {
            let f = next(&mut i)?;
            mesh.periodic.push((num(&f[0], i - 1)? as u32, num(&f[1], i - 1)? as u32));
        }
        let f = next(&mut i)?;
        mesh.h_target = num(f.get(1).ok_or_else(|| bad(i - 1, "expected `h_target h`"))?, i - 1)?;
        Ok(mesh)
    }

    /// Node-to-triangle incidence in compressed form: triangles of node `v`
    /// are `items[start[v]..start[v + 1]]`.
    pub fn node_triangles(&self) -> (Vec<u32>, Vec<u32>) {
        let mut start = vec![0u32; self.nodes.len() + 1];
        for t in &self.triangles {
            for &v in t {
                start[v as usize + 1] += 1;
            }
        }
        for i in 0..self.nodes.len() {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut items = vec![0u32; start[self.nodes.len()] as usize];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                items[fill[v as usize] as usize] = ti as u32;
                fill[v as usize] += 1;
            }
        }
        (start, items)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

/// Smallest interior angle in degrees.
pub fn min_angle(t: [Point; 3]) -> f64 {
    let mut best: f64 = 180.0;
    for k in 0..3 {
        let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
        let (u, v) = (sub(b, a), sub(c, a));
        let ang = cross(u, v).abs().atan2(crate::geometry::dot(u, v));
        best = best.min(ang.to_degrees());
    }
    best
}
