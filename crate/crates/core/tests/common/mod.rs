#![allow(dead_code)]

use roughlab::experiment::instance::{solve_instance, Instance, InstanceSpec};
use roughlab::geometry::DomainSpec;
use roughlab::pde::{CoefficientField, CoefficientPreset};

pub fn laminate() -> CoefficientField {
    CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 }).unwrap()
}

pub fn identity() -> CoefficientField {
    CoefficientField::new(CoefficientPreset::Identity).unwrap()
}

pub fn instance(domain: DomainSpec, eps: f64, coeff: CoefficientField, curvature: f64) -> Instance {
    solve_instance(&InstanceSpec { domain, epsilon: eps, coeff, h: eps / 8.0, radius: 2.0, curvature }).unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
