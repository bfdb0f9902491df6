//! `Φ(r)`, the excess `H(r)`, the slope `h(r)` and the slab flatness along a scale ladder.
use roughlab::analysis::{build_profile, ladder, BallIntegrator};
use roughlab::experiment::instance::{solve_instance, InstanceSpec};
use roughlab::geometry::DomainSpec;
use roughlab::pde::{CoefficientField, CoefficientPreset};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 32.0;
    let coeff = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 })?;
    let inst = solve_instance(&InstanceSpec { domain: DomainSpec::sawtooth(1.0), epsilon: eps, coeff, h: eps / 8.0, radius: 2.0, curvature: 0.0 })?;
    let integ = BallIntegrator::new(&inst.u);
    let prof = build_profile(&integ, &inst.domain, &ladder(2.0 * eps, 1.0, 2f64.powf(0.5)))?;
    println!("{:>9} {:>9} {:>10} {:>9} {:>8}  flags", "r", "Φ", "H", "h", "ζ");
    for k in 0..prof.len() {
        println!("{:>9.5} {:>9.5} {:>10.3e} {:>9.5} {:>8.4}  {}", prof.scales[k], prof.phi[k], prof.excess[k], prof.slope[k], prof.zeta[k], prof.flags[k]);
    }
    Ok(())
}
