//! Per-family constants and verdicts aggregated over the ε sweep.

use super::config::{CheckKind, ExperimentConfig};
use super::runner::{Cell, CellResult};
use crate::stats::{linear_fit, relative_spread};
use serde::Serialize;
use std::collections::BTreeMap;

/// Largest `(max - min) / min` of a constant across the sweep.
pub const MAX_SPREAD: f64 = 0.5;
pub const RATE_SLOPE: [f64; 2] = [0.35, 0.75];
/// In units of `d / 2`.
pub const CONVEXITY_EXPONENT: [f64; 2] = [0.8, 1.3];
pub const FLAT_DECAY_RATIO: f64 = 0.6;
/// FEM error over lhs above which a rate record is unreliable.
pub const FEM_ERROR_RATIO: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub epsilon: f64,
    pub seed: u64,
    /// Absent when the check failed for this cell.
    pub metrics: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub check: String,
    /// The fitted constant's name and its value per cell.
    pub constant: String,
    pub values: Vec<f64>,
    /// Spread, slope or worst value, depending on the criterion.
    pub statistic: f64,
    pub criterion: String,
    pub verdict: Verdict,
    pub samples: Vec<Sample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilySummary {
    pub name: String,
    pub checks: Vec<CheckSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub families: Vec<FamilySummary>,
}

impl RunSummary {
    pub fn check(&self, family: &str, check: CheckKind) -> Option<&CheckSummary> {
        self.families.iter().find(|f| f.name == family)?.checks.iter().find(|c| c.check == check.name())
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Run summary\n");
        for fam in &self.families {
            s.push_str(&format!("\n## {}\n\n| check | constant | values | statistic | criterion | verdict |\n|---|---|---|---|---|---|\n", fam.name));
            for c in &fam.checks {
                let vals: Vec<String> = c.values.iter().map(|v| format!("{v:.4}")).collect();
                s.push_str(&format!(
                    "| {} | {} | {} | {:.4} | {} | {} |\n",
                    c.check,
                    c.constant,
                    vals.join(", "),
                    c.statistic,
                    c.criterion,
                    if c.verdict == Verdict::Pass { "PASS" } else { "FAIL" }
                ));
            }
        }
        s
    }
}

fn spread_summary(values: &[f64], complete: bool, what: &str) -> (f64, String, Verdict) {
    let spread = relative_spread(values);
    let ok = complete && values.iter().all(|v| v.is_finite()) && spread <= MAX_SPREAD;
    (spread, format!("{what} finite, spread (max-min)/min <= {MAX_SPREAD}"), if ok { Verdict::Pass } else { Verdict::Fail })
}

fn all_pass(values: &[f64], complete: bool) -> (f64, String, Verdict) {
    let worst = values.iter().cloned().fold(1.0, f64::min);
    let ok = complete && !values.is_empty() && values.iter().all(|&v| v == 1.0);
    (worst, "every cell passes".into(), if ok { Verdict::Pass } else { Verdict::Fail })
}

fn summarize_check(cfg: &ExperimentConfig, family: &str, check: CheckKind, samples: Vec<Sample>) -> CheckSummary {
    let fam = cfg.families.iter().find(|f| f.name == family).expect("family exists");
    let complete = samples.iter().all(|s| s.metrics.is_some()) && !samples.is_empty();
    let get = |key: &str| -> Vec<f64> {
        samples.iter().filter_map(|s| s.metrics.as_ref().and_then(|m| m.get(key).copied())).collect()
    };
    let (constant, values, (statistic, criterion, verdict)) = match check {
        CheckKind::Lipschitz => {
            let v = get("sup_ratio");
            let r = spread_summary(&v, complete, "sup ratio");
            ("sup_ratio", v, r)
        }
        CheckKind::Caccioppoli | CheckKind::ReverseHolder | CheckKind::Cz => {
            let v = get("max_ratio");
            let r = spread_summary(&v, complete, "worst ratio");
            ("max_ratio", v, r)
        }
        CheckKind::ExcessDecay if fam.is_flat() => {
            let v = get("max_decay_ratio");
            let worst = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ok = complete && worst <= FLAT_DECAY_RATIO;
            (
                "max_decay_ratio",
                v,
                (worst, format!("H(θr)/H(r) <= {FLAT_DECAY_RATIO} for r >= r_min"), if ok { Verdict::Pass } else { Verdict::Fail }),
            )
        }
        CheckKind::ExcessDecay => {
            let v = get("c_fit");
            let r = spread_summary(&v, complete, "C_fit");
            ("c_fit", v, r)
        }
        CheckKind::Rate => {
            let mut pts = Vec::new();
            let mut fem_ok = true;
            for s in &samples {
                if let Some(m) = &s.metrics {
                    let n = m.get("normalized").copied().unwrap_or(f64::NAN);
                    if n > 0.0 {
                        pts.push((s.epsilon.ln(), n.ln()));
                    }
                    fem_ok &= m.get("fem_error_ratio").is_some_and(|&f| f <= FEM_ERROR_RATIO);
                }
            }
            let slope = linear_fit(&pts).map_or(f64::NAN, |f| f.slope);
            let ok = complete && fem_ok && slope >= RATE_SLOPE[0] && slope <= RATE_SLOPE[1];
            (
                "normalized",
                get("normalized"),
                (
                    slope,
                    format!("slope of ln normalized vs ln ε in [{}, {}], FEM error <= {FEM_ERROR_RATIO} lhs", RATE_SLOPE[0], RATE_SLOPE[1]),
                    if ok { Verdict::Pass } else { Verdict::Fail },
                ),
            )
        }
        CheckKind::Iteration => {
            let r = all_pass(&get("pass"), complete);
            ("c0", get("c0"), r)
        }
        CheckKind::Admissibility | CheckKind::Comparison => {
            let v = get("pass");
            let r = all_pass(&v, complete);
            ("pass", v, r)
        }
        CheckKind::Convexity => {
            let v = get("exponent");
            let ok = complete && v.iter().all(|&e| e >= CONVEXITY_EXPONENT[0] && e <= CONVEXITY_EXPONENT[1]);
            let worst = v.iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max);
            (
                "exponent",
                v,
                (
                    worst,
                    format!("exponent in [{}, {}] (d/2 = 1)", CONVEXITY_EXPONENT[0], CONVEXITY_EXPONENT[1]),
                    if ok { Verdict::Pass } else { Verdict::Fail },
                ),
            )
        }
        CheckKind::Approximation => {
            let v = get("k_scale");
            let r = spread_summary(&v, complete, "K");
            ("k_scale", v, r)
        }
    };
    CheckSummary { check: check.name().into(), constant: constant.into(), values, statistic, criterion, verdict, samples }
}

pub fn summarize(cfg: &ExperimentConfig, cells: &[Cell], results: &[CellResult]) -> RunSummary {
    let mut families = Vec::new();
    for fam in &cfg.families {
        let mut checks = Vec::new();
        for check in cfg.checks_for(fam) {
            let samples = cells
                .iter()
                .zip(results)
                .filter(|(c, _)| c.family == fam.name)
                .map(|(c, r)| Sample { epsilon: c.epsilon, seed: c.seed, metrics: r.metrics.get(&check).cloned() })
                .collect();
            checks.push(summarize_check(cfg, &fam.name, check, samples));
        }
        families.push(FamilySummary { name: fam.name.clone(), checks });
    }
    RunSummary { families }
}
