use super::coefficient::{tensor_index, CoefficientField, Tensor, DIM};
use super::sparse::CsrMatrix;
use crate::geometry::Point;
use crate::mesh::Mesh;

pub const UNUSED: u32 = u32::MAX;

/// Map from `(node, component)` to a free unknown, or `UNUSED` for fixed values.
/// Periodically identified nodes share their master's unknowns.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub m: usize,
    pub index: Vec<u32>,
    pub n_free: usize,
}

impl DofMap {
    /// All nodes free except those with `fixed[node]`.
    pub fn new(mesh: &Mesh, m: usize, fixed: &[bool]) -> Self {
        let mut index = vec![UNUSED; mesh.nodes.len() * m];
        let mut master: Vec<u32> = (0..mesh.nodes.len() as u32).collect();
        for &(s, t) in &mesh.periodic {
            master[s as usize] = t;
        }
        let mut n = 0u32;
        for v in 0..mesh.nodes.len() {
            if fixed[v] || master[v] as usize != v {
                continue;
            }
            for c in 0..m {
                index[v * m + c] = n;
                n += 1;
            }
        }
        for v in 0..mesh.nodes.len() {
            let t = master[v] as usize;
            if t != v && !fixed[v] {
                for c in 0..m {
                    index[v * m + c] = index[t * m + c];
                }
            }
        }
        DofMap { m, index, n_free: n as usize }
    }

    #[inline]
    pub fn dof(&self, node: usize, comp: usize) -> u32 {
        self.index[node * self.m + comp]
    }
}

/// Geometry and averaged coefficient of one element.
pub struct Element {
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad: [Point; 3],
    pub coeff: Tensor,
}

/// Coefficient averaged over the centroids of the three sub-triangles
/// formed with the element centroid, evaluated at `x / epsilon`.
pub fn element(mesh: &Mesh, t: usize, coeff: &CoefficientField, epsilon: f64) -> Element {
    let p = mesh.triangle(t);
    let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        grad[i] = [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice];
    }
    let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    let n = coeff.components() * DIM;
    let mut acc: Tensor = [0.0; 36];
    let mut tmp: Tensor = [0.0; 36];
    for i in 0..3 {
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let q = [(c[0] + a[0] + b[0]) / 3.0 / epsilon, (c[1] + a[1] + b[1]) / 3.0 / epsilon];
        coeff.eval(q, &mut tmp);
        for k in 0..n * n {
            acc[k] += tmp[k] / 3.0;
        }
    }
    Element { area: 0.5 * twice, grad, coeff: acc }
}

/// Local stiffness entry for basis `(a, α)` against `(b, β)`.
#[inline]
pub fn local_entry(e: &Element, m: usize, a: usize, alpha: usize, b: usize, beta: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            s += e.grad[a][i] * e.coeff[tensor_index(m, alpha, beta, i, j)] * e.grad[b][j];
        }
    }
    e.area * s
}

/// Sparsity pattern over free unknowns.
pub fn pattern(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let m = dofs.m;
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); dofs.n_free];
    for tri in &mesh.triangles {
        for &va in tri {
            for ca in 0..m {
                let r = dofs.dof(va as usize, ca);
                if r == UNUSED {
                    continue;
                }
                let row = &mut rows[r as usize];
                for &vb in tri {
                    for cb in 0..m {
                        let c = dofs.dof(vb as usize, cb);
                        if c != UNUSED && !row.contains(&c) {
                            row.push(c);
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_pattern(dofs.n_free, rows)
}

/// Stiffness on free unknowns and the right-hand side produced by fixed values.
///
/// `fixed_values[node * m + comp]` is read only where the unknown is fixed.
/// `load(element, a, alpha)` adds a volume term for basis `(a, α)`.
pub fn assemble(
    mesh: &Mesh,
    coeff: &CoefficientField,
    epsilon: f64,
    dofs: &DofMap,
    fixed_values: &[f64],
    mut load: impl FnMut(&Element, usize, usize) -> f64,
) -> (CsrMatrix, Vec<f64>) {
    let m = dofs.m;
    let mut k = pattern(mesh, dofs);
    let mut rhs = vec![0.0; dofs.n_free];
    for t in 0..mesh.triangles.len() {
        let e = element(mesh, t, coeff, epsilon);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for alpha in 0..m {
                let r = dofs.dof(tri[a] as usize, alpha);
                if r == UNUSED {
                    continue;
                }
                rhs[r as usize] += load(&e, a, alpha);
                for b in 0..3 {
                    for beta in 0..m {
                        let v = local_entry(&e, m, a, alpha, b, beta);
                        let c = dofs.dof(tri[b] as usize, beta);
                        if c == UNUSED {
                            rhs[r as usize] -= v * fixed_values[tri[b] as usize * m + beta];
                        } else {
                            k.add(r as usize, c as usize, v);
                        }
                    }
                }
            }
        }
    }
    (k, rhs)
}

/// `∫ A ∇u · ∇u` for nodal values `u` with `m` components.
pub fn energy(mesh: &Mesh, coeff: &CoefficientField, epsilon: f64, values: &[f64]) -> f64 {
    let m = coeff.components();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let e = element(mesh, t, coeff, epsilon);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for alpha in 0..m {
                for b in 0..3 {
                    for beta in 0..m {
                        total += values[tri[a] as usize * m + alpha]
                            * local_entry(&e, m, a, alpha, b, beta)
                            * values[tri[b] as usize * m + beta];
                    }
                }
            }
        }
    }
    total
}
