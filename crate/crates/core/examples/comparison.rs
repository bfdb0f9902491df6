//! Comparison with a flat envelope and the convexity exponent of the Dirichlet energy.
use roughlab::experiment::checks::{comparison, convexity, AnalysisSettings, CellContext};
use roughlab::experiment::instance::{solve_instance, InstanceSpec};
use roughlab::geometry::{BoundarySpec, DomainSpec, Profile};
use roughlab::pde::{CoefficientField, CoefficientPreset};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 16.0;
    let coeff = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 })?;
    let inner = DomainSpec {
        boundary: BoundarySpec::Graph { macro_profile: Profile::Zero, micro_profile: Profile::Sawtooth { amplitude: 1.0, phase: 0.5 } },
        rotation: 0.0,
    };
    let inst = solve_instance(&InstanceSpec { domain: inner, epsilon: eps, coeff, h: eps / 8.0, radius: 2.0, curvature: 0.0 })?;
    let settings = AnalysisSettings::default();
    let ctx = CellContext { family: "comparison", instance: &inst, settings: &settings, seed: 1 };
    let cmp = comparison(&ctx, &DomainSpec::half_plane())?;
    println!("comparison: {:?}", cmp.metrics);
    let conv = convexity(&ctx)?;
    println!("convexity: {:?}", conv.metrics);
    Ok(())
}
