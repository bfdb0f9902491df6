//! TOML experiment configuration.
//!
//! ```toml
//! output_dir = "out/minimal"
//! checks = ["lipschitz"]
//! seeds = [1]
//!
//! [coefficient.preset]
//! kind = "identity"
//!
//! [[family]]
//! name = "flat"
//! epsilons = [0.0625]
//! domain = { boundary = { kind = "half_plane" } }
//! ```

use super::checks::AnalysisSettings;
use crate::error::{Error, Result};
use crate::geometry::{BoundarySpec, DomainSpec, Profile};
use crate::pde::{CoefficientField, CoefficientPreset};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable that replaces the base directory of a relative `output_dir`.
pub const OUTPUT_ROOT_ENV: &str = "ROUGHLAB_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Lipschitz,
    Caccioppoli,
    ReverseHolder,
    Cz,
    Rate,
    ExcessDecay,
    Iteration,
    Convexity,
    Admissibility,
    Approximation,
    Comparison,
}

impl CheckKind {
    pub const ALL: [CheckKind; 11] = [
        CheckKind::Lipschitz,
        CheckKind::Caccioppoli,
        CheckKind::ReverseHolder,
        CheckKind::Cz,
        CheckKind::Rate,
        CheckKind::ExcessDecay,
        CheckKind::Iteration,
        CheckKind::Convexity,
        CheckKind::Admissibility,
        CheckKind::Approximation,
        CheckKind::Comparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Lipschitz => "lipschitz",
            CheckKind::Caccioppoli => "caccioppoli",
            CheckKind::ReverseHolder => "reverse_holder",
            CheckKind::Cz => "cz",
            CheckKind::Rate => "rate",
            CheckKind::ExcessDecay => "excess_decay",
            CheckKind::Iteration => "iteration",
            CheckKind::Convexity => "convexity",
            CheckKind::Admissibility => "admissibility",
            CheckKind::Approximation => "approximation",
            CheckKind::Comparison => "comparison",
        }
    }

    /// Whether the check reads the family's solved instance on `D_radius`.
    pub fn needs_instance(self) -> bool {
        !matches!(self, CheckKind::Rate | CheckKind::Admissibility)
    }

    /// Checks whose scales must satisfy `ε < ε0²`.
    pub fn needs_small_epsilon(self) -> bool {
        matches!(self, CheckKind::Cz | CheckKind::ExcessDecay)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub preset: CoefficientPreset,
    #[serde(default = "one")]
    pub scale: f64,
    /// Declared ellipticity bound; the measured `Λ` must not exceed it.
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl CoefficientConfig {
    pub fn build(&self) -> Result<CoefficientField> {
        let field = CoefficientField::scaled(self.preset.clone(), self.scale)?;
        if let Some(bound) = self.lambda {
            if field.lambda() > bound * (1.0 + 1e-9) {
                return Err(Error::Config(format!(
                    "coefficient has Λ = {:.6}, above the declared bound {bound}",
                    field.lambda()
                )));
            }
        }
        Ok(field)
    }

    /// Constant and identity presets do not oscillate, so they carry no mesh constraint.
    pub fn oscillates(&self) -> bool {
        !matches!(self.preset, CoefficientPreset::Identity | CoefficientPreset::Constant { .. })
    }
}

/// `h(ε) = min(h_over_epsilon · ε, h_max)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshRule {
    pub h_over_epsilon: f64,
    pub h_max: Option<f64>,
}

impl Default for MeshRule {
    fn default() -> Self {
        MeshRule { h_over_epsilon: 0.125, h_max: None }
    }
}

impl MeshRule {
    pub fn h(&self, epsilon: f64) -> f64 {
        let h = self.h_over_epsilon * epsilon;
        self.h_max.map_or(h, |m| h.min(m))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: String,
    pub epsilons: Vec<f64>,
    pub domain: DomainSpec,
    /// Radius of the solved ball `D_radius`.
    #[serde(default = "two")]
    pub radius: f64,
    /// `κ` in the outer data `x2 (1 + κ x1)`.
    #[serde(default = "one")]
    pub curvature: f64,
    /// Envelope domain for the comparison check.
    #[serde(default)]
    pub envelope: Option<DomainSpec>,
    /// Draw the micro-profile phase from the cell seed.
    #[serde(default)]
    pub randomize_phase: bool,
    /// Overrides the top-level check list.
    #[serde(default)]
    pub checks: Option<Vec<CheckKind>>,
}

impl FamilyConfig {
    /// The domain of one cell; the phase is drawn from `seed` when requested.
    pub fn domain_for(&self, seed: u64) -> DomainSpec {
        let mut spec = self.domain.clone();
        if self.randomize_phase {
            if let BoundarySpec::Graph { micro_profile, .. } = &mut spec.boundary {
                let phase = super::runner::seeded_unit(seed);
                match micro_profile {
                    Profile::Sawtooth { phase: p, .. } | Profile::Sine { phase: p, .. } => *p = phase,
                    _ => {}
                }
            }
        }
        spec
    }

    /// Flat control families have a straight boundary.
    pub fn is_flat(&self) -> bool {
        matches!(self.domain.boundary, BoundarySpec::HalfPlane)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub coefficient: CoefficientConfig,
    #[serde(default)]
    pub mesh: MeshRule,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(rename = "family", default)]
    pub families: Vec<FamilyConfig>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |k| offset - k - 1) + 1;
    (line, column)
}

impl ExperimentConfig {
    /// Parses and validates; syntax and schema errors carry line and column.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            Error::Parse { path: path.to_path_buf(), line, column, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse(&text, path)
    }

    /// Hard invariants. The `ε < ε0²` condition is soft and reported per cell instead.
    pub fn validate(&self) -> Result<()> {
        let oscillating = self.coefficient.oscillates();
        if self.families.is_empty() {
            return Err(Error::Config("at least one [[family]] is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(self.mesh.h_over_epsilon > 0.0) || self.mesh.h_max.is_some_and(|m| !(m > 0.0)) {
            return Err(Error::Config("mesh sizes must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for fam in &self.families {
            if !names.insert(fam.name.as_str()) {
                return Err(Error::Config(format!("duplicate family name `{}`", fam.name)));
            }
            if fam.epsilons.is_empty() {
                return Err(Error::Config(format!("family `{}` has no epsilons", fam.name)));
            }
            if !(fam.radius > 0.0 && fam.radius.is_finite()) {
                return Err(Error::Config(format!("family `{}`: radius must be positive", fam.name)));
            }
            for &eps in &fam.epsilons {
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::Config(format!("family `{}`: ε = {eps} must lie in (0, 1)", fam.name)));
                }
                let h = self.mesh.h(eps);
                if oscillating && h > eps / 8.0 * (1.0 + 1e-12) {
                    return Err(Error::Config(format!(
                        "family `{}`: mesh size h = {h} exceeds ε/8 = {} for oscillating coefficients",
                        fam.name,
                        eps / 8.0
                    )));
                }
            }
            if self.checks_for(fam).contains(&CheckKind::Comparison) && fam.envelope.is_none() {
                return Err(Error::Config(format!("family `{}`: the comparison check needs an envelope", fam.name)));
            }
            crate::geometry::RoughDomain::new(fam.domain.clone(), fam.epsilons[0])?;
        }
        self.coefficient.build()?;
        Ok(())
    }

    pub fn checks_for(&self, fam: &FamilyConfig) -> Vec<CheckKind> {
        let mut list = fam.checks.clone().unwrap_or_else(|| self.checks.clone());
        list.sort();
        list.dedup();
        list
    }

    /// Every check enabled in at least one family, in canonical order.
    pub fn all_checks(&self) -> Vec<CheckKind> {
        let mut list: Vec<CheckKind> = self.families.iter().flat_map(|f| self.checks_for(f)).collect();
        list.sort();
        list.dedup();
        list
    }

    /// `output_dir`, resolved against `$ROUGHLAB_OUTPUT_ROOT` when it is relative and the variable is set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
output_dir = "out"
checks = ["lipschitz"]

[coefficient.preset]
kind = "identity"

[[family]]
name = "flat"
epsilons = [0.0625]
domain = { boundary = { kind = "half_plane" } }
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL, Path::new("m.toml")).unwrap();
        assert_eq!(cfg.checks, vec![CheckKind::Lipschitz]);
        assert_eq!(cfg.seeds, vec![1]);
        assert_eq!(cfg.families[0].radius, 2.0);
        assert_eq!(cfg.mesh.h(0.0625), 0.0625 / 8.0);
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let text = MINIMAL.replace("epsilons = [0.0625]", "epsilons = [0.0625");
        match ExperimentConfig::parse(&text, Path::new("bad.toml")) {
            Err(Error::Parse { line, column, .. }) => {
                assert!(line >= 10, "line {line}");
                assert!(column >= 1);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = MINIMAL.replace("checks = [\"lipschitz\"]", "checks = [\"lipschitz\"]\nchekcs = 1");
        match ExperimentConfig::parse(&text, Path::new("bad.toml")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn coarse_mesh_with_oscillating_coefficients_is_rejected() {
        let text = MINIMAL
            .replace("kind = \"identity\"", "kind = \"laminate\"\namplitude = 1.0")
            .replace("[coefficient.preset]", "[mesh]\nh_over_epsilon = 0.25\n\n[coefficient.preset]");
        assert!(matches!(ExperimentConfig::parse(&text, Path::new("m.toml")), Err(Error::Config(_))));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }
}
