use crate::error::{Error, Result};
use crate::geometry::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DIM: usize = 2;
pub const MAX_COMPONENTS: usize = 3;
/// Storage for one evaluation `a^{αβ}_{ij}` at index `((α m + β) d + i) d + j`.
pub type Tensor = [f64; (MAX_COMPONENTS * DIM) * (MAX_COMPONENTS * DIM)];

#[inline]
pub fn tensor_index(m: usize, alpha: usize, beta: usize, i: usize, j: usize) -> usize {
    ((alpha * m + beta) * DIM + i) * DIM + j
}

fn default_mean() -> f64 {
    2.0
}

fn default_scale() -> f64 {
    1.0
}

/// Periodic coefficient presets, functions of the fast variable `y = x / ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientPreset {
    Identity,
    /// `(mean + amplitude sin(2π (y1 + phase))) I`.
    Laminate {
        #[serde(default = "default_mean")]
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `a I` where `floor(2 y1) + floor(2 y2)` is even, `b I` elsewhere.
    Checkerboard { a: f64, b: f64 },
    /// Bilinear interpolation of `values[row * k + col]` at `y = (col / k, row / k)`, times `I`.
    Tabulated { k: usize, values: Vec<f64> },
    /// A constant symmetric matrix.
    Constant { matrix: [[f64; 2]; 2] },
    /// Two-component system `(2 + sin 2π y1) (μ δ_αβ δ_ij + λ δ_iα δ_jβ)`.
    Elastic { mu: f64, lambda: f64 },
}

impl CoefficientPreset {
    pub fn components(&self) -> usize {
        match self {
            CoefficientPreset::Elastic { .. } => 2,
            _ => 1,
        }
    }

    fn scalar(&self, y: Point) -> f64 {
        match self {
            CoefficientPreset::Identity | CoefficientPreset::Constant { .. } => 1.0,
            CoefficientPreset::Laminate { mean, amplitude, phase } => {
                mean + amplitude * (2.0 * PI * (y[0] + phase)).sin()
            }
            CoefficientPreset::Checkerboard { a, b } => {
                let k = (2.0 * y[0]).floor() as i64 + (2.0 * y[1]).floor() as i64;
                if k.rem_euclid(2) == 0 { *a } else { *b }
            }
            CoefficientPreset::Tabulated { k, values } => {
                let n = *k as f64;
                let (u, v) = ((y[0] - y[0].floor()) * n, (y[1] - y[1].floor()) * n);
                let (i, j) = ((u.floor() as usize).min(k - 1), (v.floor() as usize).min(k - 1));
                let (fu, fv) = (u - i as f64, v - j as f64);
                let at = |i: usize, j: usize| values[(j % k) * k + (i % k)];
                at(i, j) * (1.0 - fu) * (1.0 - fv)
                    + at(i + 1, j) * fu * (1.0 - fv)
                    + at(i, j + 1) * (1.0 - fu) * fv
                    + at(i + 1, j + 1) * fu * fv
            }
            CoefficientPreset::Elastic { .. } => 2.0 + (2.0 * PI * y[0]).sin(),
        }
    }
}

/// An elliptic, bounded, 1-periodic coefficient field with ellipticity constant `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub preset: CoefficientPreset,
    /// Constant factor multiplying the preset.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// `Λ ≥ 1` with `ξ·Aξ ≥ |ξ|²/Λ` and `|A| ≤ Λ`, measured on a sample grid.
    #[serde(skip)]
    lambda: f64,
}

impl CoefficientField {
    pub fn new(preset: CoefficientPreset) -> Result<Self> {
        Self::scaled(preset, 1.0)
    }

    pub fn scaled(preset: CoefficientPreset, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("coefficient scale must be positive, got {scale}")));
        }
        if let CoefficientPreset::Tabulated { k, values } = &preset {
            if *k == 0 || values.len() != k * k {
                return Err(Error::Config(format!("tabulated coefficient needs {k}x{k} values, got {}", values.len())));
            }
        }
        let mut field = CoefficientField { preset, scale, lambda: 1.0 };
        field.lambda = field.measure_ellipticity()?;
        Ok(field)
    }

    /// Reads a tabulated scalar coefficient: first token `k`, then `k*k` values row by row.
    pub fn from_table_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
        let mut tokens = text.split_whitespace();
        let k: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Config(format!("{}: expected the table size first", path.display())))?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse().map_err(|_| Error::Config(format!("{}: bad value {t}", path.display()))))
            .collect::<Result<_>>()?;
        Self::new(CoefficientPreset::Tabulated { k, values })
    }

    pub fn components(&self) -> usize {
        self.preset.components()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.preset {
            CoefficientPreset::Constant { matrix } => matrix[0][1] == matrix[1][0],
            _ => true,
        }
    }

    /// Writes `a^{αβ}_{ij}(y)` into `out`.
    pub fn eval(&self, y: Point, out: &mut Tensor) {
        let m = self.components();
        let s = self.scale * self.preset.scalar(y);
        out[..(m * DIM) * (m * DIM)].fill(0.0);
        match &self.preset {
            CoefficientPreset::Constant { matrix } => {
                for i in 0..DIM {
                    for j in 0..DIM {
                        out[tensor_index(1, 0, 0, i, j)] = s * matrix[i][j];
                    }
                }
            }
            CoefficientPreset::Elastic { mu, lambda } => {
                for a in 0..m {
                    for b in 0..m {
                        for i in 0..DIM {
                            for j in 0..DIM {
                                let mut v = 0.0;
                                if a == b && i == j {
                                    v += mu;
                                }
                                if i == a && j == b {
                                    v += lambda;
                                }
                                out[tensor_index(m, a, b, i, j)] = s * v;
                            }
                        }
                    }
                }
            }
            _ => {
                out[tensor_index(1, 0, 0, 0, 0)] = s;
                out[tensor_index(1, 0, 0, 1, 1)] = s;
            }
        }
    }

    /// Canonical JSON of the preset and scale, the input to coefficient hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::json!({ "preset": self.preset, "scale": self.scale }).to_string()
    }

    fn measure_ellipticity(&self) -> Result<f64> {
        let m = self.components();
        let n = m * DIM;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let xis: Vec<Vec<f64>> = (0..32)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut t = [0.0; 36];
        let mut t_shift = [0.0; 36];
        let (mut min_quad, mut max_norm) = (f64::INFINITY, 0.0f64);
        let g = 64;
        for a in 0..g {
            for b in 0..g {
                let y = [a as f64 / g as f64, b as f64 / g as f64];
                self.eval(y, &mut t);
                for shift in [[1.0, 0.0], [0.0, 1.0]] {
                    self.eval([y[0] + shift[0], y[1] + shift[1]], &mut t_shift);
                    if (0..n * n).any(|k| (t[k] - t_shift[k]).abs() > 1e-9 * (1.0 + t[k].abs())) {
                        return Err(Error::Config(format!("coefficient is not 1-periodic near y = {y:?}")));
                    }
                }
                for xi in &xis {
                    let norm2: f64 = xi.iter().map(|v| v * v).sum();
                    let mut quad = 0.0;
                    let mut image2 = 0.0;
                    // Row index (α, i), column index (β, j).
                    for r in 0..n {
                        let (al, i) = (r / DIM, r % DIM);
                        let mut row = 0.0;
                        for c in 0..n {
                            let (be, j) = (c / DIM, c % DIM);
                            row += t[tensor_index(m, al, be, i, j)] * xi[c];
                        }
                        quad += xi[r] * row;
                        image2 += row * row;
                    }
                    min_quad = min_quad.min(quad / norm2);
                    max_norm = max_norm.max((image2 / norm2).sqrt());
                }
            }
        }
        if !(min_quad > 0.0) {
            return Err(Error::Config(format!(
                "coefficient is not elliptic: min ξ·Aξ/|ξ|² = {min_quad:.3e}"
            )));
        }
        Ok((1.0 / min_quad).max(max_norm).max(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laminate_lambda_is_three() {
        let c = CoefficientField::new(CoefficientPreset::Laminate { mean: 2.0, amplitude: 1.0, phase: 0.0 }).unwrap();
        assert!((c.lambda() - 3.0).abs() < 1e-2, "{}", c.lambda());
    }

    #[test]
    fn nonelliptic_preset_is_rejected() {
        assert!(CoefficientField::new(CoefficientPreset::Laminate { mean: 1.0, amplitude: 2.0, phase: 0.0 }).is_err());
    }

    #[test]
    fn tabulated_constant_table_is_constant() {
        let c = CoefficientField::new(CoefficientPreset::Tabulated { k: 3, values: vec![1.5; 9] }).unwrap();
        let mut t = [0.0; 36];
        c.eval([0.37, 0.91], &mut t);
        assert!((t[0] - 1.5).abs() < 1e-15 && t[1] == 0.0);
    }
}
