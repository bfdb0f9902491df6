//! Structural invariants: exact geometric identities, sandwich and equivariance
//! properties of the slab fit, the lattice averaging algorithm, H ≤ Φ,
//! Galerkin orthogonality and determinism.

mod common;

use common::{instance, laminate};
use proptest::prelude::*;
use roughlab::analysis::{averaging_mt_spaced, build_profile, excess_quantities, ladder, BallIntegrator};
use roughlab::geometry::{fit_slab, BoundarySpec, DomainSpec, Profile, RoughDomain};
use roughlab::mesh::{clip_triangle_disk, polygon_area, triangle_disk_area, triangulate_region, BoundaryTag, Region};
use roughlab::pde::{galerkin_residual, CoefficientField, CoefficientPreset, DiscreteField};
use roughlab::stats::linear_fit;
use std::f64::consts::PI;
use std::sync::Arc;

fn sawtooth(phase: f64, rotation: f64) -> DomainSpec {
    DomainSpec {
        boundary: BoundarySpec::Graph { macro_profile: Profile::Zero, micro_profile: Profile::Sawtooth { amplitude: 1.0, phase } },
        rotation,
    }
}

fn rotate(p: [f64; 2], a: f64) -> [f64; 2] {
    [a.cos() * p[0] - a.sin() * p[1], a.sin() * p[0] + a.cos() * p[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clipped_polygon_area_matches_exact_area(
        pts in prop::array::uniform6(-2.0f64..2.0),
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, r in 0.05f64..2.0,
    ) {
        let mut tri = [[pts[0], pts[1]], [pts[2], pts[3]], [pts[4], pts[5]]];
        let signed = polygon_area(&tri);
        prop_assume!(signed.abs() > 1e-3);
        if signed < 0.0 {
            tri.swap(1, 2);
        }
        let exact = triangle_disk_area(tri, [cx, cy], r);
        prop_assert!(exact >= -1e-12 && exact <= polygon_area(&tri).min(PI * r * r) + 1e-12);
        let poly = clip_triangle_disk(tri, [cx, cy], r, 1e-3);
        // Chords of angle δ lose at most r²δ³/12 per unit angle.
        prop_assert!((polygon_area(&poly) - exact).abs() <= 1e-6 * r * r + 1e-12, "{} vs {}", polygon_area(&poly), exact);
    }

    #[test]
    fn slab_fit_is_rotation_equivariant(angle in -1.2f64..1.2, r in 0.1f64..1.0, phase in 0.0f64..1.0) {
        let eps = 1.0 / 16.0;
        let upright = RoughDomain::new(sawtooth(phase, 0.0), eps).unwrap();
        let turned = RoughDomain::new(sawtooth(phase, angle), eps).unwrap();
        let a = fit_slab(&upright, [0.0, 0.0], r).unwrap();
        let b = fit_slab(&turned, [0.0, 0.0], r).unwrap();
        prop_assert!((a.halfwidth - b.halfwidth).abs() <= 1e-6 * r, "{} vs {}", a.halfwidth, b.halfwidth);
        let n = rotate(a.normal, angle);
        prop_assert!((n[0] - b.normal[0]).hypot(n[1] - b.normal[1]) < 1e-4, "{:?} vs {:?}", n, b.normal);
    }

    #[test]
    fn slab_sandwich_holds_on_random_points(
        r in 0.1f64..1.0, phase in 0.0f64..1.0, angle in -0.8f64..0.8,
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 200),
    ) {
        let domain = RoughDomain::new(sawtooth(phase, angle), 1.0 / 16.0).unwrap();
        let fit = fit_slab(&domain, [0.0, 0.0], r).unwrap();
        for (u, v) in pts {
            let (rho, th) = (r * u.sqrt(), 2.0 * PI * v);
            let x = [rho * th.cos(), rho * th.sin()];
            if fit.in_lower(x) {
                prop_assert!(domain.contains(x), "{x:?} below the slab but outside D");
            }
            if domain.contains(x) {
                prop_assert!(fit.in_upper(x), "{x:?} in D but above the slab");
            }
        }
    }

    #[test]
    fn excess_never_exceeds_phi(values in prop::collection::vec(-1.0f64..1.0, 1..64), angle in 0.0f64..PI, r in 0.2f64..1.0) {
        let mesh = small_ball();
        let vals: Vec<f64> = (0..mesh.nodes.len()).map(|i| values[i % values.len()] + mesh.nodes[i][0]).collect();
        let field = DiscreteField::new(mesh, 1, vals, None);
        let ex = excess_quantities(&BallIntegrator::new(&field), [angle.cos(), angle.sin()], r).unwrap();
        prop_assert!(ex.excess <= ex.phi * (1.0 + 1e-12), "H = {} > Φ = {}", ex.excess, ex.phi);
    }

    #[test]
    fn lattice_averaging_matches_direct_sums(
        weights in prop::collection::vec(0.0f64..2.0, 1..40),
        t in 0.08f64..0.3, spacing_frac in 0.3f64..1.0,
    ) {
        let mesh = small_ball();
        let field = DiscreteField::zero(mesh.clone(), 1);
        let integ = BallIntegrator::new(&field);
        let w: Vec<f64> = (0..mesh.triangles.len()).map(|k| weights[k % weights.len()]).collect();
        let m = averaging_mt_spaced(&integ, &w, t, 2.0, [0.0, 0.0], 1.0 - t, spacing_frac * t / 4.0);
        prop_assert!(!m.points.is_empty());
        for (x, v) in m.points.iter().zip(&m.values) {
            let direct = (integ.piecewise_constant(*x, t, |k| w[k] * w[k]) / (PI * t * t)).sqrt();
            prop_assert!((v - direct).abs() <= 1e-9 * (1.0 + direct), "{x:?}: {v} vs {direct}");
        }
    }

    #[test]
    fn least_squares_recovers_exact_lines(slope in -5.0f64..5.0, icpt in -5.0f64..5.0, n in 2usize..30) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64 * 0.37, slope * i as f64 * 0.37 + icpt)).collect();
        let fit = linear_fit(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9 && (fit.intercept - icpt).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn meshes_respect_size_and_angle_bounds(phase in 0.0f64..1.0, angle in -0.6f64..0.6, radius in 0.3f64..1.5) {
        let h = 1.0 / 32.0;
        let domain = RoughDomain::new(sawtooth(phase, angle), 1.0 / 8.0).unwrap();
        let mesh = triangulate_region(&Region::DomainBall { domain: &domain, radius }, h).unwrap();
        mesh.validate().unwrap();
        let q = mesh.quality();
        prop_assert!(q.min_angle_deg >= 15.0, "min angle {}", q.min_angle_deg);
        prop_assert!(q.h_max <= h * (1.0 + 1e-9), "h_max {}", q.h_max);
        prop_assert!(mesh.nodes.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
        // Mesh area lies between the areas of B_radius below the slab and below the upper face.
        let fit = fit_slab(&domain, [0.0, 0.0], radius).unwrap();
        let seg = |level: f64| {
            let d = (level / radius).clamp(-1.0, 1.0);
            radius * radius * (PI - d.acos() + d * (1.0 - d * d).sqrt())
        };
        prop_assert!(q.area >= seg(fit.lower_level()) - 1e-3 && q.area <= seg(fit.upper_level()) + 1e-3);
    }
}

fn small_ball() -> Arc<roughlab::mesh::Mesh> {
    Arc::new(triangulate_region(&Region::Ball { center: [0.0, 0.0], radius: 1.0 }, 0.08).unwrap())
}

#[test]
fn excess_below_phi_on_solved_profiles() {
    for (domain, kappa) in [(DomainSpec::sawtooth(1.0), 0.0), (DomainSpec::sawtooth(1.0).rotated(0.3), 1.0), (DomainSpec::half_plane(), 1.0)] {
        let inst = instance(domain, 1.0 / 16.0, laminate(), kappa);
        let prof = build_profile(&BallIntegrator::new(&inst.u), &inst.domain, &ladder(1.0 / 8.0, 2.0, 2f64.sqrt())).unwrap();
        for k in 0..prof.len() {
            assert!(prof.excess[k] <= prof.phi[k], "r = {}: H = {} > Φ = {}", prof.scales[k], prof.excess[k], prof.phi[k]);
        }
    }
}

#[test]
fn galerkin_residuals_vanish() {
    let coeffs = [
        laminate(),
        CoefficientField::new(CoefficientPreset::Checkerboard { a: 1.0, b: 4.0 }).unwrap(),
        CoefficientField::new(CoefficientPreset::Constant { matrix: [[2.0, 0.5], [0.5, 1.0]] }).unwrap(),
    ];
    for coeff in coeffs {
        let eps = 1.0 / 8.0;
        let inst = instance(DomainSpec::sawtooth(1.0).rotated(0.2), eps, coeff.clone(), 1.0);
        let res = galerkin_residual(&inst.u, &coeff, eps, &[BoundaryTag::Rough, BoundaryTag::Ball]).unwrap();
        assert!(res <= 1e-10, "{:?}: residual {res}", coeff.preset);
    }
}

#[test]
fn solves_are_bit_identical() {
    let a = instance(DomainSpec::sawtooth(1.0), 1.0 / 8.0, laminate(), 1.0);
    let b = instance(DomainSpec::sawtooth(1.0), 1.0 / 8.0, laminate(), 1.0);
    assert_eq!(a.u.mesh.nodes, b.u.mesh.nodes);
    assert_eq!(a.u.mesh.triangles, b.u.mesh.triangles);
    assert!(a.u.values.iter().zip(&b.u.values).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn collinear_slivers_on_the_rough_boundary_leave_a_tagged_mesh() {
    // A chain vertex collinear with its neighbours once produced an untagged edge and an 8° triangle.
    let domain = RoughDomain::new(sawtooth(0.33763871003140605, 0.0), 1.0 / 8.0).unwrap();
    let mesh = triangulate_region(&Region::DomainBall { domain: &domain, radius: 1.0249247222743152 }, 1.0 / 32.0).unwrap();
    mesh.validate().unwrap();
    assert!(mesh.quality().min_angle_deg >= 15.0, "min angle {}", mesh.quality().min_angle_deg);
}
