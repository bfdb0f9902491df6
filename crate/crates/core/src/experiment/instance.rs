use crate::error::Result;
use crate::geometry::{fit_slab, DomainSpec, Point, RoughDomain, SlabFit};
use crate::mesh::{triangulate_region, BoundaryTag, Mesh, Region};
use crate::pde::{comparison_solution, solve_dirichlet, CoefficientField, DirichletReport, DiscreteField, SolverOptions};
use std::sync::Arc;
use std::time::Instant;

/// Outer data `g(x) = x2 (1 + κ x1)`: it vanishes on `{x2 = 0}` and is `Â`-harmonic for diagonal `Â`.
pub fn outer_data(x: Point, curvature: f64) -> f64 {
    x[1] * (1.0 + curvature * x[0])
}

/// One Dirichlet problem on `D ∩ B_radius`, `u = 0` on the rough boundary and `u = g` on the circle.
#[derive(Clone, Debug)]
pub struct InstanceSpec {
    pub domain: DomainSpec,
    pub epsilon: f64,
    pub coeff: CoefficientField,
    pub h: f64,
    pub radius: f64,
    /// `κ` in the outer data.
    pub curvature: f64,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub domain: RoughDomain,
    /// Zero-extended to `B_radius(0)`.
    pub u: DiscreteField,
    pub report: DirichletReport,
    pub mesh_seconds: f64,
    pub solve_seconds: f64,
}

impl Instance {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.u.mesh
    }
}

pub fn mesh_domain_ball(domain: &RoughDomain, radius: f64, h: f64) -> Result<Mesh> {
    triangulate_region(&Region::DomainBall { domain, radius }, h)
}

pub fn solve_instance(spec: &InstanceSpec) -> Result<Instance> {
    let domain = RoughDomain::new(spec.domain.clone(), spec.epsilon)?;
    let clock = Instant::now();
    let mesh = Arc::new(mesh_domain_ball(&domain, spec.radius, spec.h)?);
    let mesh_seconds = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let (u, report) = solve_dirichlet(
        mesh,
        &spec.coeff,
        spec.epsilon,
        |x, tag, out| {
            out.fill(if tag == BoundaryTag::Ball { outer_data(x, spec.curvature) } else { 0.0 });
            Ok(())
        },
        &[BoundaryTag::Rough, BoundaryTag::Ball],
        &SolverOptions::default(),
    )?;
    let solve_seconds = clock.elapsed().as_secs_f64();
    log::info!(
        "instance eps={} h={}: {} triangles, mesh {:.1}s, solve {:.1}s ({} iterations)",
        spec.epsilon,
        spec.h,
        u.mesh.triangles.len(),
        mesh_seconds,
        solve_seconds,
        report.solver.iterations
    );
    Ok(Instance {
        u: u.with_extension([0.0, 0.0], spec.radius),
        spec: spec.clone(),
        domain,
        report,
        mesh_seconds,
        solve_seconds,
    })
}

/// Solution `w` on `T_r^+` of the slab fit at the origin, with `w = u` on its boundary.
pub fn slab_solution(
    u: &DiscreteField,
    fit: &SlabFit,
    coeff: &CoefficientField,
    epsilon: f64,
    h: f64,
) -> Result<(DiscreteField, DirichletReport)> {
    let mesh = Arc::new(triangulate_region(&Region::upper_slab(fit), h)?);
    let (w, rep) = solve_dirichlet(
        mesh,
        coeff,
        epsilon,
        |x, _, out| u.value_at(x, out),
        &[BoundaryTag::Slab, BoundaryTag::Ball],
        &SolverOptions::default(),
    )?;
    Ok((w.with_extension(fit.center, fit.r), rep))
}

/// The slab fit at the origin at scale `r`.
pub fn origin_slab(domain: &RoughDomain, r: f64) -> Result<SlabFit> {
    fit_slab(domain, [0.0, 0.0], r)
}

/// `u` on `D_2` and the comparison solution `w` on the envelope's `D_2`, both at spacing `h`.
pub fn comparison_pair(
    inner: &InstanceSpec,
    envelope: &DomainSpec,
) -> Result<(Instance, DiscreteField, DirichletReport)> {
    let inst = solve_instance(inner)?;
    let env = RoughDomain::new(envelope.clone(), inner.epsilon)?;
    let mesh = Arc::new(mesh_domain_ball(&env, inner.radius, inner.h)?);
    let (w, rep) = comparison_solution(mesh, &inner.coeff, inner.epsilon, &inst.u, &SolverOptions::default())?;
    Ok((inst, w, rep))
}
