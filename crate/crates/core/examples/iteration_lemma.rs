//! The constructive iteration verifier on synthetic profiles.
//!
//! A clean profile satisfies every hypothesis; inflating the excess breaks the decay hypothesis.
use roughlab::analysis::{iteration_verify, measure_c0, IterationParams, SampledTriple};
use roughlab::geometry::{ModulusFn, ModulusKind};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let (eps, theta, eps0) = (1e-3, 0.2, 0.18);
    let zeta = ModulusKind::PowerS { coefficient: 0.5, exponent: 1.0 };
    let eta = ModulusFn::new(ModulusKind::IterationEta { zeta: Box::new(zeta), sigma: 0.4, theta }, 1.0)?;
    let clean = SampledTriple::from_fns(eps, 64, |r| 0.05 * r.sqrt(), |_| 1.0, |_| 1.0);
    let c0 = measure_c0(&clean, theta, eps0, &eta, 1.05);
    let params = IterationParams { theta, eps0, c0 };
    let rep = iteration_verify(&clean, &params, &eta)?;
    println!("clean: C0 = {c0:.3}, verdict {:?}, case {:?}, α = {:?}", rep.verdict, rep.case, rep.alpha);
    println!("       conclusion {:.4} <= {:?}", rep.conclusion_lhs, rep.conclusion_rhs);

    let noisy = SampledTriple::from_fns(eps, 64, |r| 0.05 * r.sqrt() + 3.0 * (r < 0.1) as u8 as f64, |_| 1.0, |_| 1.0);
    let rep = iteration_verify(&noisy, &params, &eta)?;
    println!("perturbed: verdict {:?}, failed hypotheses {:?}", rep.verdict, rep.failed_hypotheses());
    Ok(())
}
