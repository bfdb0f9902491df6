//! Homogenization error `‖w_ε - w_0‖` on a half-ball at two values of ε, with the FEM-error estimate.
use roughlab::cell::compute;
use roughlab::experiment::checks::{rate, AnalysisSettings};
use roughlab::geometry::DomainSpec;
use roughlab::pde::{CoefficientField, CoefficientPreset};
use roughlab::stats::loglog_fit;
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let coeff = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 })?;
    let hom = compute(&coeff, 1.0 / 64.0)?.homogenized_coefficient()?;
    let settings = AnalysisSettings::default();
    let (mut es, mut ns) = (Vec::new(), Vec::new());
    for eps in [1.0 / 16.0, 1.0 / 32.0] {
        let out = rate("flat", &DomainSpec::half_plane(), eps, &coeff, &hom, &settings, eps / 8.0, 1.0)?;
        let m = &out.metrics;
        println!("ε = {eps:.5}: lhs {:.3e}, normalized {:.3e}, FEM error / lhs {:.3}", m["lhs"], m["normalized"], m["fem_error_ratio"]);
        es.push(eps);
        ns.push(m["normalized"]);
    }
    if let Some(fit) = loglog_fit(&es, &ns) {
        println!("slope of normalized error in ε: {:.3}", fit.slope);
    }
    Ok(())
}
