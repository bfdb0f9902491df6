use super::assembly::{assemble, element, energy, local_entry, DofMap, UNUSED};
use super::coefficient::CoefficientField;
use super::field::DiscreteField;
use super::solver::{solve, SolveStats, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryTag, Mesh};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct DirichletReport {
    pub solver: SolveStats,
    pub dirichlet_nodes: usize,
    /// `∫ A^ε ∇u_h · ∇u_h`.
    pub energy: f64,
}

/// Nodes on edges carrying one of `tags`, with the highest-priority such tag.
pub fn dirichlet_nodes(mesh: &Mesh, tags: &[BoundaryTag]) -> Result<Vec<Option<BoundaryTag>>> {
    let mut out: Vec<Option<BoundaryTag>> = vec![None; mesh.nodes.len()];
    for tag in tags {
        if !mesh.boundary_edges.iter().any(|e| e.tag == *tag) {
            return Err(Error::Config(format!("Dirichlet tag `{}` does not occur on the mesh boundary", tag.name())));
        }
    }
    for e in &mesh.boundary_edges {
        if !tags.contains(&e.tag) {
            continue;
        }
        for &v in &e.nodes {
            let slot = &mut out[v as usize];
            *slot = Some(slot.map_or(e.tag, |t| t.min(e.tag)));
        }
    }
    if out.iter().all(Option::is_none) {
        return Err(Error::Config("no Dirichlet nodes: the problem is singular".into()));
    }
    Ok(out)
}

/// P1 Galerkin solution of `-div(A(x/ε)∇u) = 0` with `u = data` on edges tagged `tags`.
///
/// `data(x, tag, out)` writes the `m` boundary values at node `x`.
pub fn solve_dirichlet(
    mesh: Arc<Mesh>,
    coeff: &CoefficientField,
    epsilon: f64,
    mut data: impl FnMut(Point, BoundaryTag, &mut [f64]) -> Result<()>,
    tags: &[BoundaryTag],
    opts: &SolverOptions,
) -> Result<(DiscreteField, DirichletReport)> {
    let m = coeff.components();
    let fixed_tag = dirichlet_nodes(&mesh, tags)?;
    let fixed: Vec<bool> = fixed_tag.iter().map(Option::is_some).collect();
    let mut values = vec![0.0; mesh.nodes.len() * m];
    for (v, tag) in fixed_tag.iter().enumerate() {
        if let Some(tag) = tag {
            data(mesh.nodes[v], *tag, &mut values[v * m..(v + 1) * m])?;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("boundary data is not finite".into()));
    }
    let dofs = DofMap::new(&mesh, m, &fixed);
    let (k, rhs) = assemble(&mesh, coeff, epsilon, &dofs, &values, |_, _, _| 0.0);
    let (x, stats) = solve(&k, &rhs, opts, None)?;
    for v in 0..mesh.nodes.len() {
        for c in 0..m {
            let d = dofs.dof(v, c);
            if d != UNUSED {
                values[v * m + c] = x[d as usize];
            }
        }
    }
    drop(k);
    let e = energy(&mesh, coeff, epsilon, &values);
    let report = DirichletReport { solver: stats, dirichlet_nodes: fixed.iter().filter(|f| **f).count(), energy: e };
    Ok((DiscreteField::new(mesh, m, values, None), report))
}

/// Largest `|∫ A^ε ∇u · ∇φ_i|` over basis functions of nodes not on `tags` edges,
/// recomputed element by element.
pub fn galerkin_residual(field: &DiscreteField, coeff: &CoefficientField, epsilon: f64, tags: &[BoundaryTag]) -> Result<f64> {
    let mesh = &field.mesh;
    let m = field.m;
    let fixed: Vec<bool> = dirichlet_nodes(mesh, tags)?.iter().map(Option::is_some).collect();
    let mut r = vec![0.0; mesh.nodes.len() * m];
    for t in 0..mesh.triangles.len() {
        let e = element(mesh, t, coeff, epsilon);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for alpha in 0..m {
                let mut s = 0.0;
                for b in 0..3 {
                    for beta in 0..m {
                        s += local_entry(&e, m, a, alpha, b, beta) * field.values[tri[b] as usize * m + beta];
                    }
                }
                r[tri[a] as usize * m + alpha] += s;
            }
        }
    }
    Ok((0..mesh.nodes.len())
        .filter(|&v| !fixed[v])
        .flat_map(|v| (0..m).map(move |c| v * m + c))
        .map(|i| r[i].abs())
        .fold(0.0, f64::max))
}

/// Solution `w` on the envelope mesh with `w = |u|` on every boundary edge,
/// where `u` is zero-extended outside its own mesh.
pub fn comparison_solution(
    envelope_mesh: Arc<Mesh>,
    coeff: &CoefficientField,
    epsilon: f64,
    u: &DiscreteField,
    opts: &SolverOptions,
) -> Result<(DiscreteField, DirichletReport)> {
    if coeff.components() != 1 || u.m != 1 {
        return Err(Error::Unsupported("comparison needs a scalar equation: the maximum principle is unavailable for systems".into()));
    }
    if u.extension.is_none() {
        return Err(Error::Precondition("comparison needs u zero-extended to the envelope".into()));
    }
    let tags: Vec<BoundaryTag> = {
        let mut t: Vec<BoundaryTag> = envelope_mesh.boundary_edges.iter().map(|e| e.tag).collect();
        t.sort();
        t.dedup();
        t
    };
    solve_dirichlet(
        envelope_mesh,
        coeff,
        epsilon,
        |x, _, out| {
            out[0] = u.scalar_at(x)?.abs();
            Ok(())
        },
        &tags,
        opts,
    )
}
