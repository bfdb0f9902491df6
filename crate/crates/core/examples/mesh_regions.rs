//! Triangulations of every supported region with their quality figures.
use roughlab::geometry::{DomainSpec, RoughDomain};
use roughlab::mesh::{triangulate_region, Region};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let eps = 1.0 / 16.0;
    let saw = RoughDomain::new(DomainSpec::sawtooth(1.0), eps)?;
    let tilted = RoughDomain::new(DomainSpec::sawtooth(1.0).rotated(0.4), eps)?;
    let regions = [
        ("sawtooth D_1", Region::DomainBall { domain: &saw, radius: 1.0 }),
        ("tilted sawtooth D_1", Region::DomainBall { domain: &tilted, radius: 1.0 }),
        ("half-ball", Region::HalfBall { center: [0.0, 0.0], normal: [0.6, 0.8], level: 0.05, radius: 0.5 }),
        ("ball", Region::Ball { center: [0.2, -0.1], radius: 0.3 }),
        ("unit cell", Region::UnitCell),
        ("rectangle", Region::Rectangle { min: [0.0, 0.0], max: [2.0, 0.5] }),
    ];
    println!("{:<22} {:>8} {:>9} {:>9} {:>10} {:>9}", "region", "nodes", "triangles", "h_max", "min angle", "area");
    for (name, region) in regions {
        let mesh = triangulate_region(&region, eps / 4.0)?;
        mesh.validate()?;
        let q = mesh.quality();
        println!("{name:<22} {:>8} {:>9} {:>9.4} {:>9.2}° {:>9.5}", q.nodes, q.triangles, q.h_max, q.min_angle_deg, q.area);
    }
    Ok(())
}
