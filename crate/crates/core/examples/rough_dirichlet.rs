//! A Dirichlet problem on `D ∩ B_2` with oscillating coefficients and a rough boundary.
use roughlab::experiment::instance::{solve_instance, InstanceSpec};
use roughlab::geometry::DomainSpec;
use roughlab::mesh::BoundaryTag;
use roughlab::pde::{galerkin_residual, CoefficientField, CoefficientPreset};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 16.0;
    let coeff = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 })?;
    let spec = InstanceSpec { domain: DomainSpec::sawtooth(1.0), epsilon: eps, coeff: coeff.clone(), h: eps / 8.0, radius: 2.0, curvature: 1.0 };
    let inst = solve_instance(&spec)?;
    let q = inst.mesh().quality();
    println!("mesh: {} nodes, {} triangles, min angle {:.1}°", q.nodes, q.triangles, q.min_angle_deg);
    let s = &inst.report.solver;
    println!("solver: {} iterations, relative residual {:.2e}, {} unknowns", s.iterations, s.relative_residual, s.unknowns);
    println!("energy ∫ A∇u·∇u = {:.5}", inst.report.energy);
    let res = galerkin_residual(&inst.u, &coeff, eps, &[BoundaryTag::Rough, BoundaryTag::Ball])?;
    println!("max free-node Galerkin residual {res:.2e}");
    for x in [[0.0, -1.0], [0.5, -0.5], [0.0, -0.05]] {
        println!("u({:.2}, {:.2}) = {:.5}", x[0], x[1], inst.u.scalar_at(x)?);
    }
    Ok(())
}
