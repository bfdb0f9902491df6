//! Minimal slabs and the empirical flatness modulus of a sawtooth boundary.
//!
//! Above the micro-scale the boundary looks flat: `ζ(r)` decays like `ε/r`.
use roughlab::geometry::{empirical_modulus, eps_star, fit_slab, DomainSpec, RoughDomain};
use roughlab::stats::log_space;
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 32.0;
    let domain = RoughDomain::new(DomainSpec::sawtooth(1.0), eps)?;
    println!("ε* = {:.4}", eps_star(&domain)?);
    println!("{:>10} {:>10} {:>10} {:>12}", "r", "ζ raw", "ζ env", "ζ r / ε");
    let scales = log_space(eps / 2.0, 1.0, 12);
    for s in empirical_modulus(&domain, [0.0, 0.0], &scales)? {
        println!("{:>10.5} {:>10.5} {:>10.5} {:>12.5}", s.r, s.raw, s.zeta, s.raw * s.r / eps);
    }
    let fit = fit_slab(&domain, [0.3, 0.0], 0.25)?;
    println!("\nslab at (0.3, 0), r = 0.25: normal ({:.4}, {:.4}), halfwidth {:.5}, offset {:.5}", fit.normal[0], fit.normal[1], fit.halfwidth, fit.offset);
    Ok(())
}
