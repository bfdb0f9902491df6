use super::assembly::{assemble, element, DofMap, UNUSED};
use super::coefficient::{tensor_index, CoefficientField, DIM};
use super::field::DiscreteField;
use super::solver::{solve, SolveStats, SolverOptions};
use crate::error::{Error, Result};
use crate::mesh::{triangulate_region, Mesh, Region};
use std::sync::Arc;

/// Periodic correctors and the homogenized tensor.
#[derive(Clone, Debug)]
pub struct Correctors {
    pub m: usize,
    /// `chi[γ * d + j]` has `m` components and solves the cell problem for `e_j` in component `γ`.
    pub chi: Vec<DiscreteField>,
    /// `Â^{αγ}_{ij}` at `tensor_index(m, α, γ, i, j)`.
    pub a_hat: Vec<f64>,
    pub stats: Vec<SolveStats>,
}

impl Correctors {
    /// The `d x d` block for components `(α, γ)`.
    pub fn block(&self, alpha: usize, gamma: usize) -> [[f64; 2]; 2] {
        let mut b = [[0.0; 2]; 2];
        for (i, row) in b.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.a_hat[tensor_index(self.m, alpha, gamma, i, j)];
            }
        }
        b
    }
}

/// Side count of the structured cell mesh for spacing `h`.
pub fn cell_divisions(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0 / 32.0 + 1e-15) {
        return Err(Error::Resolution(format!("cell mesh spacing must be at most 1/32, got {h}")));
    }
    Ok((1.0 / h).round() as usize)
}

/// Solves `div A(∇χ + e_j) = 0` on the periodic unit cell with zero mean, for every `(γ, j)`.
pub fn solve_cell_problems(coeff: &CoefficientField, h: f64) -> Result<Correctors> {
    let n = cell_divisions(h)?;
    let mesh = Arc::new(triangulate_region(&Region::UnitCell, 1.0 / n as f64)?);
    solve_cell_problems_on(mesh, coeff)
}

pub fn solve_cell_problems_on(mesh: Arc<Mesh>, coeff: &CoefficientField) -> Result<Correctors> {
    let m = coeff.components();
    assert!(!mesh.periodic.is_empty(), "cell problem needs a periodic mesh for the mean constraint");
    let dofs = DofMap::new(&mesh, m, &vec![false; mesh.nodes.len()]);
    let mut weights = vec![0.0; dofs.n_free];
    for t in 0..mesh.triangles.len() {
        let a = mesh.area(t) / 3.0;
        for &v in &mesh.triangles[t] {
            for c in 0..m {
                weights[dofs.dof(v as usize, c) as usize] += a;
            }
        }
    }
    let zero = vec![0.0; mesh.nodes.len() * m];
    let opts = SolverOptions::jacobi();
    let mut chi = Vec::with_capacity(m * DIM);
    let mut stats = Vec::with_capacity(m * DIM);
    for gamma in 0..m {
        for j in 0..DIM {
            // Load: -∫ a^{αγ}_{ij} ∂_i φ^α.
            let (k, rhs) = assemble(&mesh, coeff, 1.0, &dofs, &zero, |e, a, alpha| {
                -e.area * (0..DIM).map(|i| e.grad[a][i] * e.coeff[tensor_index(m, alpha, gamma, i, j)]).sum::<f64>()
            });
            let (x, s) = solve(&k, &rhs, &opts, Some(&weights))?;
            let mut values = vec![0.0; mesh.nodes.len() * m];
            for v in 0..mesh.nodes.len() {
                for c in 0..m {
                    let d = dofs.dof(v, c);
                    debug_assert!(d != UNUSED);
                    values[v * m + c] = x[d as usize];
                }
            }
            chi.push(DiscreteField::new(mesh.clone(), m, values, None));
            stats.push(s);
        }
    }
    // Â^{αγ}_{ij} = ∫ a^{αγ}_{ij} + a^{αβ}_{ik} ∂_k χ^{β}_{(γ,j)}.
    let mut a_hat = vec![0.0; (m * DIM) * (m * DIM)];
    for t in 0..mesh.triangles.len() {
        let e = element(&mesh, t, coeff, 1.0);
        let grads: Vec<[[f64; 2]; 3]> = chi.iter().map(|f| f.gradient(t)).collect();
        for alpha in 0..m {
            for gamma in 0..m {
                for i in 0..DIM {
                    for j in 0..DIM {
                        let g = &grads[gamma * DIM + j];
                        let mut v = e.coeff[tensor_index(m, alpha, gamma, i, j)];
                        for beta in 0..m {
                            for k in 0..DIM {
                                v += e.coeff[tensor_index(m, alpha, beta, i, k)] * g[beta][k];
                            }
                        }
                        a_hat[tensor_index(m, alpha, gamma, i, j)] += e.area * v;
                    }
                }
            }
        }
    }
    Ok(Correctors { m, chi, a_hat, stats })
}
