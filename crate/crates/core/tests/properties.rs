//! Per-module properties: modulus envelope, mesh area and refinement, energy
//! stability, h-convergence, coefficient scaling, averaging inequalities,
//! least-squares optimality, zero extension and the cell cache.

mod common;

use common::{identity, instance, laminate, simpson};
use proptest::prelude::*;
use roughlab::analysis::averaging::{AVERAGED_L2_CONSTANT, INNER_VOLUME_FRACTION};
use roughlab::analysis::{averaging_mt_spaced, excess_quantities, ladder, overlap_constant, BallIntegrator};
use roughlab::cell::{compute, HomogenizationCache};
use roughlab::experiment::instance::{origin_slab, slab_solution};
use roughlab::geometry::{dot, empirical_modulus, BoundarySpec, DomainSpec, Profile, RoughDomain};
use roughlab::mesh::{triangulate_region, BoundaryTag, Region};
use roughlab::pde::{solve_dirichlet, CoefficientField, CoefficientPreset, DiscreteField, SolverOptions};
use roughlab::Error;
use std::f64::consts::PI;
use std::sync::Arc;

fn random_field(seed: u64) -> (Arc<roughlab::mesh::Mesh>, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mesh = Arc::new(triangulate_region(&Region::Ball { center: [0.0, 0.0], radius: 1.0 }, 0.04).unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let w = (0..mesh.triangles.len()).map(|_| rng.gen_range(0.0..3.0)).collect();
    (mesh, w)
}

#[test]
fn scaled_flatness_envelope_is_nondecreasing() {
    let domain = RoughDomain::new(DomainSpec::sawtooth(1.0).rotated(0.5), 1.0 / 16.0).unwrap();
    let samples = empirical_modulus(&domain, [0.0, 0.0], &ladder(1.0 / 16.0, 1.0, 2f64.powf(0.25))).unwrap();
    for w in samples.windows(2) {
        assert!(w[1].r * w[1].zeta >= w[0].r * w[0].zeta * (1.0 - 1e-12));
        assert!(w[1].zeta <= 0.5);
    }
}

#[test]
fn flatness_above_half_is_rejected() {
    // A steep sine boundary leaves no slab of relative half-width ≤ 1/2 at r = ε.
    let spec = DomainSpec {
        boundary: BoundarySpec::Graph { macro_profile: Profile::Zero, micro_profile: Profile::Sine { amplitude: 0.5, phase: 0.0 } },
        rotation: 0.0,
    };
    let eps = 1.0 / 32.0;
    let domain = RoughDomain::new(spec, eps).unwrap();
    let err = empirical_modulus(&domain, [0.0, 0.0], &ladder(eps, 1.0, 2.0)).unwrap_err();
    assert!(matches!(err, Error::FlatnessTooLarge { .. }), "{err}");
}

#[test]
fn mesh_area_matches_monte_carlo() {
    use rand::{Rng, SeedableRng};
    let eps = 1.0 / 8.0;
    let domain = RoughDomain::new(DomainSpec::sawtooth(1.0).rotated(0.3), eps).unwrap();
    let mesh = triangulate_region(&Region::DomainBall { domain: &domain, radius: 1.0 }, eps / 8.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let n = 200_000;
    let (mut hits, mut total) = (0usize, 0usize);
    while total < n {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if x[0] * x[0] + x[1] * x[1] < 1.0 {
            total += 1;
            hits += domain.contains(x) as usize;
        }
    }
    let mc = PI * hits as f64 / n as f64;
    assert!((mesh.total_area() - mc).abs() < 0.01 * mc, "{} vs {mc}", mesh.total_area());
}

#[test]
fn refinement_shrinks_boundary_error() {
    let err = |h: f64| (triangulate_region(&Region::Ball { center: [0.0, 0.0], radius: 1.0 }, h).unwrap().total_area() - PI).abs();
    for h in [0.2, 0.1, 0.05] {
        assert!(err(h / 2.0) <= 0.5 * err(h), "h = {h}: {} then {}", err(h), err(h / 2.0));
    }
}

#[test]
fn slab_energy_is_controlled_by_the_data() {
    let eps = 1.0 / 16.0;
    let coeff = laminate();
    let inst = instance(DomainSpec::sawtooth(1.0), eps, coeff.clone(), 1.0);
    let r = 0.5;
    let fit = origin_slab(&inst.domain, r).unwrap();
    let (w, _) = slab_solution(&inst.u, &fit, &coeff, eps, eps / 8.0).unwrap();
    let gw = BallIntegrator::new(&w).grad_power([0.0, 0.0], r, 2.0).sqrt();
    let gu = BallIntegrator::new(&inst.u).grad_power([0.0, 0.0], r, 2.0).sqrt();
    let lambda = coeff.lambda();
    assert!(gw <= (lambda * lambda + 1.0) * gu, "‖∇w‖ = {gw}, ‖∇u‖ = {gu}");
}

#[test]
fn harmonic_polynomial_converges_at_second_order() {
    let exact = |x: [f64; 2]| x[0] * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1];
    let error = |h: f64| {
        let mesh = Arc::new(triangulate_region(&Region::Ball { center: [0.0, 0.0], radius: 1.0 }, h).unwrap());
        let (u, _) = solve_dirichlet(mesh, &identity(), 1.0, |x, _, out| {
            out[0] = exact(x);
            Ok(())
        }, &[BoundaryTag::Ball], &SolverOptions::default())
        .unwrap();
        let integ = BallIntegrator::new(&u);
        integ.quadratic([0.0, 0.0], 1.0, |_, x, v| (v[0] - exact(x)).powi(2)).sqrt()
    };
    let ratio = error(0.1) / error(0.05);
    assert!(ratio >= 3.5, "L² error ratio {ratio}");
}

#[test]
fn scaling_the_coefficient_leaves_the_solution_unchanged() {
    let eps = 1.0 / 8.0;
    let a = instance(DomainSpec::sawtooth(1.0), eps, laminate(), 1.0);
    let scaled = CoefficientField::scaled(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 }, 3.5).unwrap();
    let b = instance(DomainSpec::sawtooth(1.0), eps, scaled, 1.0);
    let worst = a.u.values.iter().zip(&b.u.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn zero_extension_matches_integral_over_the_domain() {
    // u = x2 on {x2 < 0}: fint_{B_r(c)} u² = ∫_{y < 0} y² 2√(r² - (y - c2)²) dy / (π r²).
    let inst = instance(DomainSpec::half_plane(), 1.0 / 8.0, identity(), 0.0);
    let integ = BallIntegrator::new(&inst.u);
    for (c, r) in [([0.3, 0.1], 0.4), ([-0.5, -0.2], 0.6), ([0.0, 0.5], 1.0f64)] {
        let c: [f64; 2] = c;
        let hi = (c[1] + r).min(0.0f64);
        let exact = simpson(|y| y * y * 2.0 * (r * r - (y - c[1]).powi(2)).max(0.0).sqrt(), c[1] - r, hi, 20_000) / (PI * r * r);
        let got = integ.ball_l2_mean(c, r).unwrap().powi(2);
        assert!((got - exact).abs() < 2e-4 * exact.max(1e-3), "{c:?}, r = {r}: {got} vs {exact}");
    }
}

#[test]
fn homogenized_tensor_differences_decrease() {
    let c = CoefficientField::new(CoefficientPreset::Laminate { mean: 3.0, amplitude: 1.0, phase: 0.25 }).unwrap();
    let a: Vec<f64> = [32.0, 64.0, 128.0].iter().map(|n| compute(&c, 1.0 / n).unwrap().matrix().unwrap()[0][0]).collect();
    assert!((a[1] - a[2]).abs() < (a[0] - a[1]).abs());
}

#[test]
fn concurrent_cache_writers_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cache = HomogenizationCache::new(dir.path());
    let coeff = laminate();
    let records: Vec<Vec<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..3).map(|_| s.spawn(|| cache.get_or_compute(&coeff, 1.0 / 32.0).unwrap().0.a_hat)).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(records.windows(2).all(|w| w[0] == w[1]));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1, "temporary files left behind");
    let (again, _) = cache.get_or_compute(&coeff, 1.0 / 32.0).unwrap();
    assert_eq!(again.a_hat, records[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn averaging_is_monotone_in_the_exponent(seed in 0u64..1000, t in 0.1f64..0.3) {
        let (mesh, w) = random_field(seed);
        let field = DiscreteField::zero(mesh, 1);
        let integ = BallIntegrator::new(&field);
        let lo = averaging_mt_spaced(&integ, &w, t, 1.0, [0.0, 0.0], 1.0 - t, t / 4.0);
        let hi = averaging_mt_spaced(&integ, &w, t, 2.0, [0.0, 0.0], 1.0 - t, t / 4.0);
        prop_assert_eq!(&lo.points, &hi.points);
        for (a, b) in lo.values.iter().zip(&hi.values) {
            prop_assert!(b >= &(a * (1.0 - 1e-12)));
        }
    }

    #[test]
    fn averaging_inequalities_hold(seed in 0u64..1000, t in 0.04f64..0.07) {
        let (mesh, w) = random_field(seed);
        let field = DiscreteField::zero(mesh, 1);
        let integ = BallIntegrator::new(&field);
        let p0 = 1.5;
        let spacing = t / 8.0;
        let m = averaging_mt_spaced(&integ, &w, t, p0, [0.0, 0.0], 1.0 - t, spacing);
        // Small balls: M_t[F](x) ≤ C (fint_{B_s(x)} M_t[F]^{p0})^{1/p0}, s < t.
        let s = 0.75 * t;
        let c = overlap_constant(p0);
        for (x, v) in m.points.iter().zip(&m.values).step_by(97) {
            if let Ok(mean) = m.ball_mean(*x, s, p0) {
                prop_assert!(*v <= c * mean * 1.05, "{x:?}: {v} > {c} · {mean}");
            }
        }
        // Large balls: (fint_{B_s} M_t[F]²)^{1/2} ≤ 2 (fint_{B_2s} F²)^{1/2}, s > t.
        let m2 = averaging_mt_spaced(&integ, &w, t, 2.0, [0.0, 0.0], 1.0 - t, spacing);
        let s = 2.0 * t;
        let lhs = m2.ball_mean([0.0, 0.0], s, 2.0).unwrap();
        let rhs = (integ.piecewise_constant([0.0, 0.0], 2.0 * s, |k| w[k] * w[k]) / (PI * 4.0 * s * s)).sqrt();
        prop_assert!(lhs <= AVERAGED_L2_CONSTANT * rhs * 1.05);
        // fint_{B_10s} M_t[F]^{p0} ≥ 0.64 fint_{B_8s} |F|^{p0} for s > t.
        let s = 0.08;
        let outer = m.ball_mean([0.0, 0.0], 10.0 * s, p0).unwrap().powf(p0);
        let inner = integ.piecewise_constant([0.0, 0.0], 8.0 * s, |k| w[k].powf(p0)) / (PI * 64.0 * s * s);
        prop_assert!(outer >= INNER_VOLUME_FRACTION * inner * 0.98, "{outer} < 0.64 · {inner}");
    }

    #[test]
    fn closed_form_slope_is_least_squares_optimal(seed in 0u64..1000, angle in 0.0f64..PI, dq in -1.0f64..1.0) {
        let (mesh, w) = random_field(seed);
        let vals: Vec<f64> = (0..mesh.nodes.len()).map(|i| w[i % w.len()] + 2.0 * mesh.nodes[i][1]).collect();
        let field = DiscreteField::new(mesh, 1, vals, None);
        let integ = BallIntegrator::new(&field);
        let n = [angle.cos(), angle.sin()];
        let r = 0.8;
        let ex = excess_quantities(&integ, n, r).unwrap();
        let objective = |q: f64| integ.quadratic([0.0, 0.0], r, |_, x, u| (u[0] - dot(n, x) * q).powi(2));
        let best = objective(ex.q[0]);
        let step = 1e-3 * dq.signum();
        prop_assert!(objective(ex.q[0] + step) >= best * (1.0 - 1e-12));
        prop_assert!(objective(ex.q[0] - step) >= best * (1.0 - 1e-12));
    }
}
