//! Admissibility of the fitted roughness modulus for several boundary families.
use roughlab::experiment::checks::{admissibility_of, AnalysisSettings};
use roughlab::geometry::{BoundarySpec, DomainSpec, Profile, RoughDomain};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let settings = AnalysisSettings::default();
    let eps = 1.0 / 32.0;
    let families = [
        ("half_plane", DomainSpec::half_plane()),
        ("sawtooth", DomainSpec::sawtooth(1.0)),
        (
            "sine",
            DomainSpec {
                boundary: BoundarySpec::Graph { macro_profile: Profile::Zero, micro_profile: Profile::Sine { amplitude: 0.5, phase: 0.0 } },
                rotation: 0.0,
            },
        ),
        ("tilted_sawtooth", DomainSpec::sawtooth(1.0).rotated(0.3)),
    ];
    for (name, spec) in families {
        let domain = RoughDomain::new(spec, eps)?;
        match admissibility_of(name, &domain, eps, &settings) {
            Ok(out) => {
                let sups: Vec<f64> = out.rows.iter().filter(|r| r.quantity == "admissibility_flatness_sup").map(|r| r.lhs).collect();
                let pass = out.metrics.get("pass").copied() == Some(1.0);
                println!("{name:<16} {} flatness sup from {:.4} to {:.4} over {} scales", if pass { "admissible" } else { "rejected  " }, sups[0], sups[sups.len() - 1], sups.len());
            }
            Err(e) => println!("{name:<16} not evaluated: {e}"),
        }
    }
    Ok(())
}
