//! Expands a configuration into (family, ε, seed) cells, runs them on a
//! worker pool, and writes CSVs, summaries, artifacts and a manifest.

use super::checks::{self, AnalysisSettings, CellContext, CheckOutcome};
use super::config::{CheckKind, ExperimentConfig, FamilyConfig};
use super::instance::{solve_instance, Instance, InstanceSpec};
use super::summary::{summarize, RunSummary};
use crate::analysis::report::{sort_rows, write_rows};
use crate::analysis::CheckRow;
use crate::cell::{CacheOutcome, HomogenizationCache};
use crate::error::{Error, Result};
use crate::geometry::RoughDomain;
use crate::pde::CoefficientField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// Version of the CSV row schema and of the output layout.
pub const OUTPUT_FORMAT: u32 = 1;

/// Uniform value in `[0, 1)` derived from a cell seed.
pub fn seeded_unit(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9a5e).gen()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub family: String,
    pub epsilon: f64,
    pub seed: u64,
    pub h: f64,
    pub checks: Vec<CheckKind>,
}

/// Families in file order, then ε in list order, then seeds.
pub fn expand_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for fam in &cfg.families {
        for &epsilon in &fam.epsilons {
            for &seed in &cfg.seeds {
                cells.push(Cell {
                    family: fam.name.clone(),
                    epsilon,
                    seed,
                    h: cfg.mesh.h(epsilon),
                    checks: cfg.checks_for(fam),
                });
            }
        }
    }
    cells
}

/// The dry-run listing, one cell per line.
pub fn format_cells(cells: &[Cell]) -> String {
    let mut s = format!("{:<20} {:>12} {:>6} {:>12}  checks\n", "family", "epsilon", "seed", "h");
    for c in cells {
        let names: Vec<&str> = c.checks.iter().map(|k| k.name()).collect();
        s.push_str(&format!("{:<20} {:>12.6e} {:>6} {:>12.6e}  {}\n", c.family, c.epsilon, c.seed, c.h, names.join(",")));
    }
    s
}

/// Everything one cell produced.
#[derive(Clone, Debug, Default)]
pub struct CellResult {
    pub rows: BTreeMap<CheckKind, Vec<CheckRow>>,
    /// Metrics of checks that completed.
    pub metrics: BTreeMap<CheckKind, BTreeMap<String, f64>>,
    pub artifacts: Vec<(String, serde_json::Value)>,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs `f`, turning a panic into an error so one cell never takes down another.
pub fn guarded<T>(f: impl FnOnce() -> Result<T>) -> Result<T> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(Error::Panic(panic_message(p))))
}

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    coeff: &'a CoefficientField,
    homogenized: &'a Result<CoefficientField>,
}

fn artifact_name(check: CheckKind, cell: &Cell) -> String {
    format!("{}-{}-eps{:.6e}-seed{}.json", check.name(), cell.family, cell.epsilon, cell.seed)
}

fn run_check(
    check: CheckKind,
    fam: &FamilyConfig,
    cell: &Cell,
    shared: &Shared,
    instance: Option<&Instance>,
    domain: &RoughDomain,
) -> Result<CheckOutcome> {
    let settings: &AnalysisSettings = &shared.cfg.analysis;
    if check == CheckKind::Admissibility {
        return checks::admissibility_of(&fam.name, domain, cell.epsilon, settings);
    }
    if check == CheckKind::Rate {
        let hom = shared.homogenized.as_ref().map_err(|e| Error::Precondition(format!("no homogenized tensor: {e}")))?;
        return checks::rate(&fam.name, domain.spec(), cell.epsilon, shared.coeff, hom, settings, cell.h, fam.curvature);
    }
    let instance = instance.ok_or_else(|| Error::Precondition("instance unavailable".into()))?;
    let ctx = CellContext { family: &fam.name, instance, settings, seed: cell.seed };
    match check {
        CheckKind::Lipschitz => checks::lipschitz(&ctx),
        CheckKind::Caccioppoli => checks::caccioppoli(&ctx),
        CheckKind::ReverseHolder => checks::reverse_holder(&ctx),
        CheckKind::Cz => checks::cz(&ctx),
        CheckKind::ExcessDecay => checks::excess_decay(&ctx, &checks::profile(&ctx)?),
        CheckKind::Iteration => checks::iteration(&ctx),
        CheckKind::Convexity => checks::convexity(&ctx),
        CheckKind::Approximation => checks::approximation(&ctx),
        CheckKind::Comparison => {
            let env = fam.envelope.as_ref().ok_or_else(|| Error::Config("comparison needs an envelope".into()))?;
            checks::comparison(&ctx, env)
        }
        CheckKind::Admissibility | CheckKind::Rate => unreachable!("handled above"),
    }
}

fn run_cell(cell: &Cell, shared: &Shared) -> CellResult {
    let clock = Instant::now();
    let cfg = shared.cfg;
    let fam = cfg.families.iter().find(|f| f.name == cell.family).expect("cell family exists");
    let eps = cell.epsilon;
    let mut out = CellResult::default();
    let fail = |out: &mut CellResult, check: CheckKind, reason: &str| {
        out.rows.entry(check).or_default().push(CheckRow::failure(&fam.name, eps, check.name(), reason));
    };
    let domain_spec = fam.domain_for(cell.seed);
    let domain = match RoughDomain::new(domain_spec.clone(), eps) {
        Ok(d) => d,
        Err(e) => {
            for &c in &cell.checks {
                fail(&mut out, c, &e.to_string());
            }
            return out;
        }
    };
    let eps0 = cfg.analysis.eps0;
    let mut runnable = Vec::new();
    for &check in &cell.checks {
        if check.needs_small_epsilon() && eps >= eps0 * eps0 {
            let msg = format!("precondition: ε = {eps} is not below ε0² = {}", eps0 * eps0);
            log::warn!("{} {check} at ε = {eps}: {msg}; check skipped", fam.name);
            out.warnings.push(format!("{} {check} ε={eps}: {msg}", fam.name));
            fail(&mut out, check, &msg);
        } else {
            runnable.push(check);
        }
    }
    let instance = if runnable.iter().any(|c| c.needs_instance()) {
        let spec = InstanceSpec {
            domain: domain_spec,
            epsilon: eps,
            coeff: shared.coeff.clone(),
            h: cell.h,
            radius: fam.radius,
            curvature: fam.curvature,
        };
        match guarded(|| solve_instance(&spec)) {
            Ok(i) => Some(i),
            Err(e) => {
                log::warn!("{} ε = {eps}: instance failed: {e}", fam.name);
                out.warnings.push(format!("{} ε={eps}: instance failed: {e}", fam.name));
                None
            }
        }
    } else {
        None
    };
    for check in runnable {
        if check.needs_instance() && instance.is_none() {
            fail(&mut out, check, "instance solve failed");
            continue;
        }
        let t = Instant::now();
        match guarded(|| run_check(check, fam, cell, shared, instance.as_ref(), &domain)) {
            Ok(o) => {
                log::info!("{} ε = {eps} seed {}: {check} done in {:.1}s", fam.name, cell.seed, t.elapsed().as_secs_f64());
                out.rows.entry(check).or_default().extend(o.rows);
                out.metrics.insert(check, o.metrics);
                if let Some(a) = o.artifact {
                    out.artifacts.push((artifact_name(check, cell), a));
                }
            }
            Err(e) => {
                log::warn!("{} ε = {eps}: {check} failed: {e}", fam.name);
                fail(&mut out, check, &e.to_string());
            }
        }
    }
    for rows in out.rows.values_mut() {
        rows.iter_mut().for_each(|r| r.seed = cell.seed);
    }
    out.seconds = clock.elapsed().as_secs_f64();
    out
}

/// Runs `cells` on `workers` threads; results come back in cell order.
fn run_pool(cells: &[Cell], shared: &Shared, workers: usize) -> Vec<CellResult> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<CellResult>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= cells.len() {
                    break;
                }
                let res = catch_unwind(AssertUnwindSafe(|| run_cell(&cells[k], shared))).unwrap_or_else(|p| {
                    let msg = panic_message(p);
                    let mut r = CellResult::default();
                    for &c in &cells[k].checks {
                        r.rows.entry(c).or_default().push(CheckRow::failure(&cells[k].family, cells[k].epsilon, c.name(), &msg));
                    }
                    r
                });
                *slots[k].lock().expect("slot lock") = Some(res);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().expect("slot lock").expect("every cell ran")).collect()
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configuration's worker count.
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CsvEntry {
    pub check: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub format: u32,
    pub config_sha256: String,
    pub config_path: String,
    pub versions: BTreeMap<String, String>,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub workers: usize,
    pub cells: Vec<CellRecord>,
    pub csv: Vec<CsvEntry>,
    pub artifacts: Vec<String>,
    pub homogenization: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub family: String,
    pub epsilon: f64,
    pub seed: u64,
    pub seconds: f64,
}

/// What a run wrote.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub summary: RunSummary,
    pub manifest: Manifest,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Runs every cell of `cfg` and writes the results under its output directory.
/// Check failures become flagged rows; only I/O and setup errors abort.
pub fn run(cfg: &ExperimentConfig, config_text: &str, config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let started_unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let out_dir = cfg.resolved_output_dir();
    std::fs::create_dir_all(&out_dir)?;
    let coeff = cfg.coefficient.build()?;
    let checks_used = cfg.all_checks();
    let mut homogenization = None;
    let homogenized = if checks_used.contains(&CheckKind::Rate) {
        let cache = HomogenizationCache::new(out_dir.join("cache"));
        guarded(|| cache.get_or_compute(&coeff, cfg.analysis.cell_h)).and_then(|(rec, outcome)| {
            homogenization = Some(format!(
                "{} ({})",
                cache.path_for(&coeff, cfg.analysis.cell_h).display(),
                match outcome {
                    CacheOutcome::Hit => "cache hit",
                    CacheOutcome::Computed => "computed",
                    CacheOutcome::Recomputed => "recomputed after a corrupt record",
                }
            ));
            rec.homogenized_coefficient()
        })
    } else {
        Err(Error::Precondition("no check needs the homogenized tensor".into()))
    };
    let cells = expand_cells(cfg);
    let workers = opts.workers.or(cfg.workers).unwrap_or(1);
    let shared = Shared { cfg, coeff: &coeff, homogenized: &homogenized };
    let results = run_pool(&cells, &shared, workers);

    let mut by_check: BTreeMap<CheckKind, Vec<CheckRow>> = checks_used.iter().map(|&c| (c, Vec::new())).collect();
    let mut artifacts = Vec::new();
    let mut warnings = Vec::new();
    if let Err(e) = &homogenized {
        if checks_used.contains(&CheckKind::Rate) {
            warnings.push(format!("homogenization failed: {e}"));
        }
    }
    for res in &results {
        for (check, rows) in &res.rows {
            by_check.entry(*check).or_default().extend(rows.iter().cloned());
        }
        warnings.extend(res.warnings.iter().cloned());
        artifacts.extend(res.artifacts.iter().cloned());
    }
    let mut csv = Vec::new();
    for (check, rows) in by_check.iter_mut() {
        sort_rows(rows);
        let file = format!("{}.csv", check.name());
        let mut buf = Vec::new();
        write_rows(&mut buf, rows)?;
        if rows.is_empty() {
            buf = b"family,epsilon,seed,r,t,quantity,lhs,rhs,ratio,flags\n".to_vec();
        }
        write_atomic(&out_dir.join(&file), &buf)?;
        csv.push(CsvEntry { check: check.name().into(), file, rows: rows.len() });
    }
    artifacts.sort_by(|a, b| a.0.cmp(&b.0));
    let mut artifact_names = Vec::new();
    if !artifacts.is_empty() {
        let dir = out_dir.join("artifacts");
        std::fs::create_dir_all(&dir)?;
        for (name, value) in &artifacts {
            write_atomic(&dir.join(name), serde_json::to_string_pretty(value)?.as_bytes())?;
            artifact_names.push(format!("artifacts/{name}"));
        }
    }
    let summary = summarize(cfg, &cells, &results);
    write_atomic(&out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    write_atomic(&out_dir.join("summary.md"), summary.to_markdown().as_bytes())?;

    let versions = BTreeMap::from([
        ("roughlab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("output_format".to_string(), OUTPUT_FORMAT.to_string()),
    ]);
    let manifest = Manifest {
        format: OUTPUT_FORMAT,
        config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
        config_path: config_path.display().to_string(),
        versions,
        started_unix,
        wall_seconds: clock.elapsed().as_secs_f64(),
        workers,
        cells: cells
            .iter()
            .zip(&results)
            .map(|(c, r)| CellRecord { family: c.family.clone(), epsilon: c.epsilon, seed: c.seed, seconds: r.seconds })
            .collect(),
        csv,
        artifacts: artifact_names,
        homogenization,
        warnings,
    };
    write_atomic(&out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(RunReport { output_dir: out_dir, summary, manifest })
}

/// Loads `path` and runs it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let cfg = ExperimentConfig::parse(&text, path)?;
    run(&cfg, &text, path, opts)
}
