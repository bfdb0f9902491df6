//! Plain-text plot series regenerated from a finished run directory.

use crate::analysis::report::CheckRow;
use crate::error::{Error, Result};
use crate::stats::linear_fit;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const PLOT_DIR: &str = "plotdata";

fn key(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

fn read_rows(path: &Path) -> Result<Vec<CheckRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Two-column blocks `r ratio`, one per (family, ε, seed, quantity), separated by blank lines.
fn series_blocks(rows: &[CheckRow]) -> String {
    let mut groups: BTreeMap<(String, i64, u64, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        if row.r.is_finite() && row.ratio.is_finite() {
            groups.entry((row.family.clone(), key(row.epsilon), row.seed, row.quantity.clone())).or_default().push((row.r, row.ratio));
        }
    }
    let mut s = String::new();
    for ((family, eps, seed, quantity), mut pts) in groups {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let _ = writeln!(s, "# family={family} epsilon={} seed={seed} quantity={quantity}\n# r ratio", eps as f64 * 1e-12);
        for (r, q) in pts {
            let _ = writeln!(s, "{r:.10e} {q:.10e}");
        }
        s.push_str("\n\n");
    }
    s
}

/// `ln(ε/r) ln(normalized)` per family with the fitted slope in the header.
fn rate_blocks(rows: &[CheckRow]) -> String {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.quantity == "rate") {
        if row.epsilon > 0.0 && row.r > 0.0 && row.ratio > 0.0 {
            groups.entry(row.family.clone()).or_default().push(((row.epsilon / row.r).ln(), row.ratio.ln()));
        }
    }
    let mut s = String::new();
    for (family, mut pts) in groups {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let slope = linear_fit(&pts).map_or(f64::NAN, |f| f.slope);
        let _ = writeln!(s, "# family={family} slope={slope:.6}\n# ln(eps/r) ln(normalized)");
        for (x, y) in pts {
            let _ = writeln!(s, "{x:.10e} {y:.10e}");
        }
        s.push_str("\n\n");
    }
    s
}

/// Writes `<dir>/plotdata/<check>.dat` for every CSV listed in the manifest; returns the written paths.
pub fn plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(Error::MissingFile(manifest_path));
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    let entries = manifest["csv"].as_array().cloned().unwrap_or_default();
    let mut written = Vec::new();
    for entry in entries {
        let (Some(check), Some(file)) = (entry["check"].as_str(), entry["file"].as_str()) else {
            return Err(Error::Config(format!("malformed csv entry in {}", manifest_path.display())));
        };
        let path = dir.join(file);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let rows = read_rows(&path)?;
        let text = if check == "rate" { rate_blocks(&rows) } else { series_blocks(&rows) };
        let out_dir = dir.join(PLOT_DIR);
        std::fs::create_dir_all(&out_dir)?;
        let out = out_dir.join(format!("{check}.dat"));
        std::fs::write(&out, text)?;
        written.push(out);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_slope_header() {
        let rows: Vec<CheckRow> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| {
                let mut row = CheckRow::new("f", e, 1.0, f64::NAN, "rate", e, e.sqrt());
                row.ratio = e.sqrt();
                row
            })
            .collect();
        let text = rate_blocks(&rows);
        assert!(text.contains("slope=0.500000"), "{text}");
    }

    #[test]
    fn series_sorted_by_r() {
        let rows = vec![CheckRow::new("f", 0.1, 0.5, f64::NAN, "q", 2.0, 1.0), CheckRow::new("f", 0.1, 0.25, f64::NAN, "q", 1.0, 1.0)];
        let text = series_blocks(&rows);
        let a = text.find("2.5000000000e-1").unwrap();
        let b = text.find("5.0000000000e-1").unwrap();
        assert!(a < b);
    }
}
