//! Closed-form oracles for the geometry, averaging, excess and cell-problem layers,
//! and frozen regression values for quantities without a closed form.

mod common;

use common::{identity, instance, laminate, simpson};
use roughlab::analysis::{averaging_mt, build_profile, excess_quantities, ladder, BallIntegrator};
use roughlab::cell::{compute, CacheOutcome, HomogenizationCache};
use roughlab::geometry::{empirical_modulus, fit_slab, DomainSpec, RoughDomain};
use roughlab::mesh::{triangulate_region, BoundaryTag, Region};
use roughlab::pde::{solve_dirichlet, CoefficientField, CoefficientPreset, DiscreteField, SolverOptions};
use std::f64::consts::PI;
use std::sync::Arc;

#[test]
fn laminate_tensor_is_harmonic_and_arithmetic_mean() {
    // a(y1) = 2 + sin(2π y1): harmonic mean 1/∫ 1/a = √3, arithmetic mean 2.
    let harmonic = 1.0 / simpson(|y| 1.0 / (2.0 + (2.0 * PI * y).sin()), 0.0, 1.0, 20_000);
    assert!((harmonic - 3f64.sqrt()).abs() < 1e-12);
    let a = compute(&laminate(), 1.0 / 64.0).unwrap().matrix().unwrap();
    assert!((a[0][0] - harmonic).abs() < 1e-3, "{a:?}");
    assert!((a[1][1] - 2.0).abs() < 1e-9, "{a:?}");
    assert!(a[0][1].abs() < 1e-9 && a[1][0].abs() < 1e-9);
}

#[test]
fn laminate_tensor_converges_at_second_order() {
    let err = |n: f64| (compute(&laminate(), 1.0 / n).unwrap().matrix().unwrap()[0][0] - 3f64.sqrt()).abs();
    let ratio = err(32.0) / err(64.0);
    assert!((3.5..4.5).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn laminate_tensor_frozen_at_h_over_32() {
    let a = compute(&laminate(), 1.0 / 32.0).unwrap().matrix().unwrap();
    assert!((a[0][0] - FROZEN_A11_H32).abs() < 1e-9, "{:.16}", a[0][0]);
}

const FROZEN_A11_H32: f64 = 1.7326340880592999;

#[test]
fn sawtooth_flatness_is_quarter_epsilon_over_r() {
    // ψ = ε dist(x1/ε, Z) ranges over [0, ε/2]: the thinnest horizontal slab has half-width ε/4.
    let eps = 1.0 / 32.0;
    let domain = RoughDomain::new(DomainSpec::sawtooth(1.0), eps).unwrap();
    for r in [2.0 * eps, 0.2, 0.5, 1.0] {
        let fit = fit_slab(&domain, [0.0, 0.0], r).unwrap();
        assert!((fit.zeta - eps / (4.0 * r)).abs() < 1e-9, "r = {r}: {}", fit.zeta);
        assert!(fit.normal[0].abs() < 1e-9 && (fit.normal[1] - 1.0).abs() < 1e-9);
    }
    let samples = empirical_modulus(&domain, [0.0, 0.0], &ladder(2.0 * eps, 1.0, 2.0)).unwrap();
    assert!(samples.iter().all(|s| (s.raw * s.r / eps - 0.25).abs() < 1e-9));
}

#[test]
fn half_plane_linear_data_has_phi_half_and_no_excess() {
    // u = x2 on the lower half-disk: ∫ x2² = π r⁴/8 over area π r²/2, so Φ = 1/2 and H = 0.
    let inst = instance(DomainSpec::half_plane(), 1.0 / 8.0, identity(), 0.0);
    let integ = BallIntegrator::new(&inst.u);
    for r in [0.25, 0.5, 1.0, 2.0] {
        let ex = excess_quantities(&integ, [0.0, 1.0], r).unwrap();
        assert!((ex.phi - 0.5).abs() < 1e-4, "r = {r}: Φ = {}", ex.phi);
        assert!(ex.excess < 1e-6, "r = {r}: H = {}", ex.excess);
        assert!((ex.slope - 1.0).abs() < 1e-9);
    }
}

#[test]
fn averaging_of_abs_x1_at_origin() {
    // fint_{B_t(0)} |x1| = 4t / (3π).
    let mesh = Arc::new(triangulate_region(&Region::Ball { center: [0.0, 0.0], radius: 1.0 }, 0.01).unwrap());
    let field = DiscreteField::zero(mesh.clone(), 1);
    let integ = BallIntegrator::new(&field);
    let values: Vec<f64> = (0..mesh.triangles.len())
        .map(|t| {
            let tri = mesh.triangle(t);
            ((tri[0][0] + tri[1][0] + tri[2][0]) / 3.0).abs()
        })
        .collect();
    for t in [0.1, 0.25, 0.5] {
        let m = averaging_mt(&integ, &values, t, 1.0, [0.0, 0.0], 0.0);
        assert_eq!(m.points, vec![[0.0, 0.0]]);
        let exact = 4.0 * t / (3.0 * PI);
        assert!((m.values[0] - exact).abs() < 2e-3 * exact + 1e-4, "t = {t}: {} vs {exact}", m.values[0]);
    }
}

#[test]
fn one_dimensional_laminate_dirichlet_solution() {
    // u(x) = ∫_0^{x1} 1/a(s/ε) ds / ∫_0^1 1/a(s/ε) ds solves the problem with its own boundary data.
    let eps = 0.25;
    let coeff = laminate();
    let inv = |s: f64| 1.0 / (2.0 + (2.0 * PI * s / eps).sin());
    let total = simpson(inv, 0.0, 1.0, 40_000);
    let exact = |x: f64| simpson(inv, 0.0, x, 4_000) / total;
    let mesh = Arc::new(triangulate_region(&Region::Rectangle { min: [0.0, 0.0], max: [1.0, 0.25] }, 1.0 / 256.0).unwrap());
    let (u, _) = solve_dirichlet(
        mesh.clone(),
        &coeff,
        eps,
        |x, _, out| {
            out[0] = exact(x[0]);
            Ok(())
        },
        &[BoundaryTag::Ball],
        &SolverOptions::default(),
    )
    .unwrap();
    let worst = mesh.nodes.iter().enumerate().map(|(i, x)| (u.node_value(i)[0] - exact(x[0])).abs()).fold(0.0, f64::max);
    assert!(worst < 2e-4, "max nodal error {worst}");
}

#[test]
fn cache_round_trip_and_corruption_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let cache = HomogenizationCache::new(dir.path());
    let coeff = CoefficientField::new(CoefficientPreset::Checkerboard { a: 1.0, b: 4.0 }).unwrap();
    let (first, o1) = cache.get_or_compute(&coeff, 1.0 / 32.0).unwrap();
    let (second, o2) = cache.get_or_compute(&coeff, 1.0 / 32.0).unwrap();
    assert_eq!((o1, o2), (CacheOutcome::Computed, CacheOutcome::Hit));
    assert_eq!(first.a_hat, second.a_hat);
    assert_eq!(first.correctors.len(), second.correctors.len());
    for (a, b) in first.correctors.iter().zip(&second.correctors) {
        assert_eq!(a.values, b.values);
    }
    let path = cache.path_for(&coeff, 1.0 / 32.0);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("a_hat", "a_hat_broken", 1)).unwrap();
    let (third, o3) = cache.get_or_compute(&coeff, 1.0 / 32.0).unwrap();
    assert_eq!(o3, CacheOutcome::Recomputed);
    assert_eq!(third.a_hat, first.a_hat);
    // A different coefficient never collides with the stored key.
    let other = CoefficientField::new(CoefficientPreset::Checkerboard { a: 1.0, b: 5.0 }).unwrap();
    assert_ne!(cache.path_for(&coeff, 1.0 / 32.0), cache.path_for(&other, 1.0 / 32.0));
}

#[test]
fn sawtooth_profile_frozen() {
    let inst = instance(DomainSpec::sawtooth(1.0), 1.0 / 16.0, laminate(), 0.0);
    let prof = build_profile(&BallIntegrator::new(&inst.u), &inst.domain, &[0.25, 1.0]).unwrap();
    for (k, (phi, h)) in FROZEN_PROFILE.iter().enumerate() {
        assert!((prof.phi[k] - phi).abs() < 1e-7 * phi, "Φ[{k}] = {:.16}", prof.phi[k]);
        assert!((prof.excess[k] - h).abs() < 1e-6 * h, "H[{k}] = {:.16}", prof.excess[k]);
    }
}

const FROZEN_PROFILE: [(f64, f64); 2] = [(0.5061608331480851, 0.02438319800485293), (0.49954141872351043, 0.004803727535588805)];
