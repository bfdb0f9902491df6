use super::Mesh;
use crate::geometry::{cross, sub, Point};

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Clone, Debug)]
pub struct TriangleGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
    /// Lowest grid cell `(i, j)` of each triangle's bounding box.
    first_cell: Vec<[u16; 2]>,
}

impl TriangleGrid {
    pub fn new(mesh: &Mesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let nt = mesh.triangles.len().max(1);
        let area = (hi[0] - lo[0]).max(1e-300) * (hi[1] - lo[1]).max(1e-300);
        let typical = (area / nt as f64).sqrt();
        let cell = (2.0 * typical).max(1e-300);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).min(1 << 14);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).min(1 << 14);
        let cell = cell.max((hi[0] - lo[0]) / nx as f64).max((hi[1] - lo[1]) / ny as f64) * (1.0 + 1e-12);
        let mut grid = TriangleGrid {
            origin: lo,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: Vec::new(),
            first_cell: Vec::new(),
        };
        let ranges: Vec<[usize; 4]> = (0..mesh.triangles.len()).map(|t| grid.range_of(mesh.triangle(t))).collect();
        grid.first_cell = ranges.iter().map(|r| [r[0] as u16, r[2] as u16]).collect();
        for r in &ranges {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    grid.start[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 0..nx * ny {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        grid.items = vec![0; grid.start[nx * ny] as usize];
        for (t, r) in ranges.iter().enumerate() {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    let k = j * nx + i;
                    grid.items[fill[k] as usize] = t as u32;
                    fill[k] += 1;
                }
            }
        }
        grid
    }

    fn index(&self, x: f64, axis: usize) -> usize {
        let n = if axis == 0 { self.nx } else { self.ny };
        (((x - self.origin[axis]) / self.cell).floor().max(0.0) as usize).min(n - 1)
    }

    fn range_of(&self, tri: [Point; 3]) -> [usize; 4] {
        let xs = tri.map(|p| p[0]);
        let ys = tri.map(|p| p[1]);
        [
            self.index(xs.iter().cloned().fold(f64::INFINITY, f64::min), 0),
            self.index(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 0),
            self.index(ys.iter().cloned().fold(f64::INFINITY, f64::min), 1),
            self.index(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1),
        ]
    }

    /// Triangles whose bounding boxes may meet the box `[lo, hi]`, possibly repeated.
    pub fn candidates(&self, lo: Point, hi: Point, mut f: impl FnMut(usize)) {
        if hi[0] < self.origin[0] || hi[1] < self.origin[1] {
            return;
        }
        let (i0, i1) = (self.index(lo[0], 0), self.index(hi[0], 0));
        let (j0, j1) = (self.index(lo[1], 1), self.index(hi[1], 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = j * self.nx + i;
                for &t in &self.items[self.start[k] as usize..self.start[k + 1] as usize] {
                    f(t as usize);
                }
            }
        }
    }

    /// Like [`candidates`](Self::candidates) but reports each triangle once: from the
    /// first grid cell its bounding box shares with the query box.
    pub fn unique_candidates(&self, lo: Point, hi: Point, mut f: impl FnMut(usize)) {
        if hi[0] < self.origin[0] || hi[1] < self.origin[1] {
            return;
        }
        let (i0, i1) = (self.index(lo[0], 0), self.index(hi[0], 0));
        let (j0, j1) = (self.index(lo[1], 1), self.index(hi[1], 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = j * self.nx + i;
                for &t in &self.items[self.start[k] as usize..self.start[k + 1] as usize] {
                    let [fi, fj] = self.first_cell[t as usize];
                    if (fi as usize).max(i0) == i && (fj as usize).max(j0) == j {
                        f(t as usize);
                    }
                }
            }
        }
    }

    /// Distinct triangles whose bounding boxes meet `B_r(c)`'s bounding box.
    pub fn disk_candidates(&self, c: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.unique_candidates([c[0] - r, c[1] - r], [c[0] + r, c[1] + r], |t| out.push(t));
        out
    }

    /// Triangle containing `p` and its barycentric coordinates, allowing a
    /// relative tolerance of `1e-10` outside the triangle.
    pub fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        self.candidates(p, p, |t| {
            let b = barycentric(mesh.triangle(t), p);
            let worst = b[0].min(b[1]).min(b[2]);
            if best.as_ref().is_none_or(|x| worst > x.2) {
                best = Some((t, b, worst));
            }
        });
        best.filter(|x| x.2 >= -1e-10).map(|x| (x.0, x.1))
    }
}

pub fn barycentric(t: [Point; 3], p: Point) -> [f64; 3] {
    let area = cross(sub(t[1], t[0]), sub(t[2], t[0]));
    let l1 = cross(sub(t[2], t[1]), sub(p, t[1])) / area;
    let l2 = cross(sub(t[0], t[2]), sub(p, t[2])) / area;
    [l1, l2, 1.0 - l1 - l2]
}
