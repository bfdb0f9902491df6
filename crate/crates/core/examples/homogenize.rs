//! Homogenized tensors from the periodic cell problems, with the on-disk cache.
//!
//! For a laminate `a(y1)` the exact tensor is `diag(harmonic mean, arithmetic mean)`.
use roughlab::cell::{compute, HomogenizationCache};
use roughlab::pde::{CoefficientField, CoefficientPreset};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let (mean, amplitude) = (2.0, 1.0);
    let laminate = CoefficientField::new(CoefficientPreset::Laminate { mean, amplitude, phase: 0.0 })?;
    let exact = [(mean * mean - amplitude * amplitude as f64).sqrt(), mean];
    for n in [32.0, 64.0, 128.0] {
        let a = compute(&laminate, 1.0 / n)?.matrix()?;
        println!("h = 1/{n:<3} Â = [[{:.6}, {:.1e}], [{:.1e}, {:.6}]]  error {:.2e}", a[0][0], a[0][1], a[1][0], a[1][1], (a[0][0] - exact[0]).abs().max((a[1][1] - exact[1]).abs()));
    }
    let checker = CoefficientField::new(CoefficientPreset::Checkerboard { a: 1.0, b: 4.0 })?;
    let a = compute(&checker, 1.0 / 32.0)?.matrix()?;
    println!("checkerboard 1/4: Â11 = {:.4}, exact sqrt(ab) = {:.4}", a[0][0], 2.0);

    let dir = tempfile::tempdir()?;
    let cache = HomogenizationCache::new(dir.path());
    let (_, first) = cache.get_or_compute(&laminate, 1.0 / 32.0)?;
    let (_, second) = cache.get_or_compute(&laminate, 1.0 / 32.0)?;
    println!("cache: {first:?} then {second:?} at {}", cache.path_for(&laminate, 1.0 / 32.0).display());
    Ok(())
}
