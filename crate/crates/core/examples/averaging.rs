//! The averaging operator `M_t` and the truncated maximal function of `|∇u|`.
use roughlab::analysis::{averaging_mt, sample_grid, truncated_maximal, BallIntegrator};
use roughlab::experiment::instance::{solve_instance, InstanceSpec};
use roughlab::geometry::DomainSpec;
use roughlab::pde::{CoefficientField, CoefficientPreset};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 16.0;
    let coeff = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 })?;
    let inst = solve_instance(&InstanceSpec { domain: DomainSpec::sawtooth(1.0), epsilon: eps, coeff, h: eps / 8.0, radius: 2.0, curvature: 1.0 })?;
    let integ = BallIntegrator::new(&inst.u);
    let grad = inst.u.gradient_norms();
    for t in [eps, 2.0 * eps, 4.0 * eps] {
        let m = averaging_mt(&integ, &grad, t, 1.0, [0.0, 0.0], 1.0);
        let max = m.values.iter().cloned().fold(0.0, f64::max);
        let mean = m.values.iter().sum::<f64>() / m.values.len() as f64;
        println!("t = {t:.4}: {} samples, sup M_t|∇u| = {max:.4}, mean {mean:.4}", m.values.len());
    }
    let samples = sample_grid([0.0, 0.0], 0.5, 0.05);
    let mf = truncated_maximal(&integ, &grad, eps, ([0.0, 0.0], 1.0), &samples, 0.05)?;
    println!("truncated maximal function: sup {:.4} over {} samples", mf.values.iter().cloned().fold(0.0, f64::max), samples.len());
    Ok(())
}
