//! Homogenized tensors and correctors, cached on disk by coefficient content hash.
//!
//! A record file is plain text:
//!
//! ```text
//! roughlab-homogenization 1
//! coeff_id <sha256 of the canonical coefficient JSON>
//! h <cell spacing>
//! d 2
//! m <components>
//! a_hat <count>
//! <one entry per line, 17 significant digits>
//! mesh_lines <L>
//! <L lines in the mesh export format>
//! correctors <count> <values per corrector>
//! <one nodal value per line>
//! checksum <sha256 of every preceding byte>
//! ```

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::pde::coefficient::tensor_index;
use crate::pde::{solve_cell_problems, CoefficientField, CoefficientPreset, DiscreteField};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

const MAGIC: &str = "roughlab-homogenization 1";

#[derive(Clone, Debug)]
pub struct HomogenizationRecord {
    pub coeff_id: String,
    /// Cell mesh spacing.
    pub resolution: f64,
    pub d: usize,
    pub m: usize,
    /// `Â^{αγ}_{ij}` at `tensor_index(m, α, γ, i, j)`.
    pub a_hat: Vec<f64>,
    /// `χ` for `(γ, j)` at index `γ d + j`.
    pub correctors: Vec<DiscreteField>,
}

impl HomogenizationRecord {
    pub fn entry(&self, alpha: usize, gamma: usize, i: usize, j: usize) -> f64 {
        self.a_hat[tensor_index(self.m, alpha, gamma, i, j)]
    }

    /// The scalar `d x d` tensor.
    pub fn matrix(&self) -> Result<[[f64; 2]; 2]> {
        if self.m != 1 {
            return Err(Error::Unsupported(format!("Â of a {}-component system is not a 2x2 matrix", self.m)));
        }
        Ok([[self.entry(0, 0, 0, 0), self.entry(0, 0, 0, 1)], [self.entry(0, 0, 1, 0), self.entry(0, 0, 1, 1)]])
    }

    /// `Â` as a constant coefficient, symmetrized; fails when the asymmetry exceeds `1e-8`.
    pub fn homogenized_coefficient(&self) -> Result<CoefficientField> {
        let a = self.matrix()?;
        if (a[0][1] - a[1][0]).abs() > 1e-8 * (a[0][0].abs() + a[1][1].abs()) {
            return Err(Error::Unsupported(format!("homogenized matrix is not symmetric: {a:?}")));
        }
        let off = 0.5 * (a[0][1] + a[1][0]);
        CoefficientField::new(CoefficientPreset::Constant { matrix: [[a[0][0], off], [off, a[1][1]]] })
    }

    /// Largest `|Â_ij - Â_ji|` over all index pairs.
    pub fn asymmetry(&self) -> f64 {
        let n = self.m * 2;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let (al, i, be, j) = (r / 2, r % 2, c / 2, c % 2);
                worst = worst.max((self.entry(al, be, i, j) - self.entry(be, al, j, i)).abs());
            }
        }
        worst
    }

    fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        use std::fmt::Write as _;
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "coeff_id {}", self.coeff_id);
        let _ = writeln!(s, "h {:.16e}", self.resolution);
        let _ = writeln!(s, "d {}", self.d);
        let _ = writeln!(s, "m {}", self.m);
        let _ = writeln!(s, "a_hat {}", self.a_hat.len());
        for v in &self.a_hat {
            let _ = writeln!(s, "{v:.16e}");
        }
        let mesh = self.correctors.first().map(|c| c.mesh.clone()).unwrap_or_default();
        let mut mesh_text = Vec::new();
        mesh.write_to(&mut mesh_text)?;
        let mesh_text = String::from_utf8(mesh_text).expect("mesh export is ASCII");
        let _ = writeln!(s, "mesh_lines {}", mesh_text.lines().count());
        s.push_str(&mesh_text);
        let per = mesh.nodes.len() * self.m;
        let _ = writeln!(s, "correctors {} {per}", self.correctors.len());
        for c in &self.correctors {
            for v in &c.values {
                let _ = writeln!(s, "{v:.16e}");
            }
        }
        let digest = hex::encode(Sha256::digest(s.as_bytes()));
        let _ = writeln!(s, "checksum {digest}");
        Ok(s)
    }

    fn from_text(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line: line + 1, column: 1, message: msg };
        let body_end = text.trim_end().rfind('\n').map(|k| k + 1).ok_or_else(|| bad(0, "empty record".into()))?;
        let (body, tail) = text.split_at(body_end);
        let stored = tail.trim().strip_prefix("checksum ").ok_or_else(|| bad(0, "missing checksum line".into()))?;
        let actual = hex::encode(Sha256::digest(body.as_bytes()));
        if stored != actual {
            return Err(bad(body.lines().count(), format!("checksum mismatch: stored {stored}, computed {actual}")));
        }
        let lines: Vec<&str> = body.lines().collect();
        let mut i = 0;
        let mut next = |what: &str| -> Result<(usize, &str)> {
            let l = *lines.get(i).ok_or_else(|| bad(i, format!("unexpected end before {what}")))?;
            i += 1;
            Ok((i - 1, l))
        };
        let field = |line: (usize, &str), key: &str| -> Result<String> {
            line.1
                .strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(line.0, format!("expected `{key}`")))
        };
        let num = |line: usize, s: &str| -> Result<f64> { s.trim().parse().map_err(|_| bad(line, format!("bad number `{s}`"))) };
        let head = next("header")?;
        if head.1 != MAGIC {
            return Err(bad(head.0, "not a homogenization record".into()));
        }
        let coeff_id = field(next("coeff_id")?, "coeff_id ")?;
        let l = next("h")?;
        let resolution = num(l.0, &field(l, "h ")?)?;
        let l = next("d")?;
        let d = num(l.0, &field(l, "d ")?)? as usize;
        let l = next("m")?;
        let m = num(l.0, &field(l, "m ")?)? as usize;
        let l = next("a_hat")?;
        let count = num(l.0, &field(l, "a_hat ")?)? as usize;
        let mut a_hat = Vec::with_capacity(count);
        for _ in 0..count {
            let l = next("a_hat entry")?;
            a_hat.push(num(l.0, l.1)?);
        }
        let l = next("mesh_lines")?;
        let nl = num(l.0, &field(l, "mesh_lines ")?)? as usize;
        let start = i;
        i += nl;
        if i > lines.len() {
            return Err(bad(start, "truncated mesh section".into()));
        }
        let mesh_text = lines[start..i].join("\n");
        let mesh = Arc::new(Mesh::read_from(mesh_text.as_bytes())?);
        let mut next = |what: &str| -> Result<(usize, &str)> {
            let l = *lines.get(i).ok_or_else(|| bad(i, format!("unexpected end before {what}")))?;
            i += 1;
            Ok((i - 1, l))
        };
        let l = next("correctors")?;
        let header: Vec<String> = field(l, "correctors ")?.split_whitespace().map(str::to_string).collect();
        if header.len() != 2 {
            return Err(bad(l.0, "expected `correctors K N`".into()));
        }
        let (k, per) = (num(l.0, &header[0])? as usize, num(l.0, &header[1])? as usize);
        if per != mesh.nodes.len() * m {
            return Err(bad(l.0, format!("corrector length {per} does not match {} nodes x {m}", mesh.nodes.len())));
        }
        let mut correctors = Vec::with_capacity(k);
        for _ in 0..k {
            let mut values = Vec::with_capacity(per);
            for _ in 0..per {
                let l = next("corrector value")?;
                values.push(num(l.0, l.1)?);
            }
            correctors.push(DiscreteField::new(mesh.clone(), m, values, None));
        }
        Ok(HomogenizationRecord { coeff_id, resolution, d, m, a_hat, correctors })
    }
}

/// `sha256(canonical JSON)` of a coefficient field.
pub fn coeff_id(coeff: &CoefficientField) -> String {
    hex::encode(Sha256::digest(coeff.canonical_json().as_bytes()))
}

/// Solves the cell problems at spacing `h` without touching any cache.
pub fn compute(coeff: &CoefficientField, h: f64) -> Result<HomogenizationRecord> {
    let c = solve_cell_problems(coeff, h)?;
    Ok(HomogenizationRecord {
        coeff_id: coeff_id(coeff),
        resolution: h,
        d: 2,
        m: c.m,
        a_hat: c.a_hat,
        correctors: c.chi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Computed,
    /// The stored file failed to load and was replaced.
    Recomputed,
}

/// Flat-file store of records under one directory.
#[derive(Clone, Debug)]
pub struct HomogenizationCache {
    dir: PathBuf,
}

impl HomogenizationCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        HomogenizationCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `{coeff_id}-h{1/h}.hom`.
    pub fn path_for(&self, coeff: &CoefficientField, h: f64) -> PathBuf {
        self.dir.join(format!("{}-h{}.hom", coeff_id(coeff), (1.0 / h).round() as u64))
    }

    pub fn get_or_compute(&self, coeff: &CoefficientField, h: f64) -> Result<(HomogenizationRecord, CacheOutcome)> {
        crate::pde::cell_problem::cell_divisions(h)?;
        let path = self.path_for(coeff, h);
        let mut outcome = CacheOutcome::Computed;
        if path.exists() {
            match std::fs::read_to_string(&path).map_err(Error::from).and_then(|t| HomogenizationRecord::from_text(&t, &path)) {
                Ok(rec) if rec.coeff_id == coeff_id(coeff) && rec.resolution == h => return Ok((rec, CacheOutcome::Hit)),
                Ok(_) => {
                    log::warn!("{}: record does not match the requested key; recomputing", path.display());
                    outcome = CacheOutcome::Recomputed;
                }
                Err(e) => {
                    log::warn!("{}: corrupt homogenization record ({e}); recomputing", path.display());
                    outcome = CacheOutcome::Recomputed;
                }
            }
        }
        let rec = compute(coeff, h)?;
        self.persist(&rec, &path)?;
        Ok((rec, outcome))
    }

    /// Writes to a temporary file in the cache directory, then renames over `path`.
    fn persist(&self, rec: &HomogenizationRecord, path: &Path) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(rec.to_text()?.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}
