//! The iteration verifier on closed-form triples: a clean profile and one
//! violation per hypothesis, each perturbing only the quantity that hypothesis constrains.

use roughlab::analysis::{iteration_verify, ConclusionVerdict, IterationParams, IterationReport, SampledTriple};
use roughlab::geometry::{ModulusFn, ModulusKind};

const EPS: f64 = 1e-3;
const PER_DECADE: usize = 64;

fn params() -> IterationParams {
    IterationParams { theta: 0.2, eps0: 0.18, c0: 2.0 }
}

fn eta() -> ModulusFn {
    let zeta = ModulusKind::PowerS { coefficient: 0.5, exponent: 1.0 };
    ModulusFn::new(ModulusKind::IterationEta { zeta: Box::new(zeta), sigma: 0.4, theta: 0.2 }, 1.0).unwrap()
}

fn clean_excess(r: f64) -> f64 {
    // H(θr) = √θ H(r) < H(r)/2 for θ = 1/5.
    0.05 * r.sqrt()
}

/// Smooth bump of unit height centred at `c` in `ln r`.
fn bump(r: f64, c: f64) -> f64 {
    (-(r / c).ln().powi(2) / (2.0 * 0.15f64.powi(2))).exp()
}

fn verify(excess: impl Fn(f64) -> f64, phi: impl Fn(f64) -> f64, slope: impl Fn(f64) -> f64) -> IterationReport {
    iteration_verify(&SampledTriple::from_fns(EPS, PER_DECADE, excess, phi, slope), &params(), &eta()).unwrap()
}

fn assert_only(report: &IterationReport, name: &str) {
    assert_eq!(report.failed_hypotheses(), vec![name], "{:?}", report.hypotheses);
    assert_eq!(report.verdict, ConclusionVerdict::NotRun);
    assert!(report.failure.as_deref().unwrap().contains(name));
}

#[test]
fn clean_triple_passes_with_finite_constant() {
    let rep = verify(clean_excess, |_| 1.0, |_| 1.0);
    assert!(rep.failed_hypotheses().is_empty(), "{:?}", rep.hypotheses);
    assert_eq!(rep.verdict, ConclusionVerdict::Pass);
    let c_out = rep.c_out.unwrap();
    assert!(c_out.is_finite() && c_out >= 1.0);
    assert!(rep.conclusion_lhs <= rep.conclusion_rhs.unwrap());
    let alpha = rep.alpha.unwrap();
    assert!(alpha > 0.0 && alpha <= 0.18);
}

#[test]
fn conclusion_lhs_matches_closed_form() {
    // ∫_ε^1 0.05 √r dr/r + sup Φ = 0.1 (1 - √ε) + 1.
    let rep = verify(clean_excess, |_| 1.0, |_| 1.0);
    let exact = 0.1 * (1.0 - EPS.sqrt()) + 1.0;
    assert!((rep.conclusion_lhs - exact).abs() < 1e-4, "{} vs {exact}", rep.conclusion_lhs);
}

#[test]
fn violation_decay() {
    // H(θr) exceeds H(r)/2 + C0 η Φ near θr = 0.02, while H ≤ C0 Φ everywhere.
    let rep = verify(|r| clean_excess(r) + 1.5 * bump(r, 0.02), |_| 1.0, |_| 1.0);
    assert_only(&rep, "H");
}

#[test]
fn violation_a() {
    // H > C0 Φ above ε0, where the decay hypothesis is not tested.
    let rep = verify(|r| clean_excess(r) + 3.0 * bump(r, 0.5), |_| 1.0, |_| 1.0);
    assert_only(&rep, "a");
}

#[test]
fn violation_b() {
    // A constant slope keeps the oscillation in (e) at zero.
    let rep = verify(clean_excess, |_| 1.0, |_| 3.0);
    assert_only(&rep, "b");
}

#[test]
fn violation_c() {
    let rep = verify(clean_excess, |_| 1.0, |_| 0.1);
    assert_only(&rep, "c");
}

#[test]
fn violation_d() {
    // Φ drops by more than C0 across one doubling; h = 1/2 keeps (b) and (c) intact.
    let rep = verify(clean_excess, |r| if r < 0.3 { 1.0 } else { 0.3 }, |_| 0.5);
    assert_only(&rep, "d");
}

#[test]
fn violation_e() {
    let rep = verify(clean_excess, |_| 1.0, |r| 1.0 + 0.2 * (3.0 * r.ln()).sin());
    assert_only(&rep, "e");
}

#[test]
fn invalid_parameters_are_rejected() {
    let data = SampledTriple::from_fns(EPS, PER_DECADE, clean_excess, |_| 1.0, |_| 1.0);
    for p in [
        IterationParams { theta: 0.3, eps0: 0.1, c0: 2.0 },
        IterationParams { theta: 0.2, eps0: 0.25, c0: 2.0 },
        IterationParams { theta: 0.2, eps0: 0.1, c0: 0.0 },
    ] {
        assert!(iteration_verify(&data, &p, &eta()).is_err(), "{p:?}");
    }
    let sparse = SampledTriple::from_fns(EPS, 8, clean_excess, |_| 1.0, |_| 1.0);
    assert!(iteration_verify(&sparse, &params(), &eta()).is_err());
}
