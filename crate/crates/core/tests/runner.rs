//! Configured runs end to end: artifacts, guards, determinism, crash isolation,
//! plot series and the command-line front end.

use roughlab::analysis::CheckRow;
use roughlab::experiment::config::{CheckKind, ExperimentConfig, OUTPUT_ROOT_ENV};
use roughlab::experiment::plotdata::plotdata;
use roughlab::experiment::runner::{run, RunOptions, RunReport};
use roughlab::experiment::summary::Verdict;
use roughlab::Error;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::Command;

const MINIMAL_BODY: &str = r#"
checks = ["lipschitz"]

[coefficient.preset]
kind = "identity"

[[family]]
name = "flat"
epsilons = [0.125]
curvature = 0.0
domain = { boundary = { kind = "half_plane" } }
"#;

fn with_output(dir: &Path, body: &str) -> String {
    format!("output_dir = {:?}\n{body}", dir.display().to_string())
}

fn run_text(text: &str, workers: usize) -> RunReport {
    let cfg = ExperimentConfig::parse(text, Path::new("test.toml")).unwrap();
    run(&cfg, text, Path::new("test.toml"), &RunOptions { workers: Some(workers) }).unwrap()
}

fn rows(path: &Path) -> Vec<CheckRow> {
    csv::Reader::from_path(path).unwrap().deserialize().map(|r| r.unwrap()).collect()
}

#[test]
fn minimal_run_has_unit_ratios_and_full_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = with_output(&out, MINIMAL_BODY);
    let rep = run_text(&text, 1);
    let lip = rows(&out.join("lipschitz.csv"));
    assert!(!lip.is_empty());
    assert!(lip.iter().all(|r| (r.ratio - 1.0).abs() < 1e-6 && r.flags.is_empty()), "{lip:?}");
    assert_eq!(rep.summary.check("flat", CheckKind::Lipschitz).unwrap().verdict, Verdict::Pass);
    for f in ["summary.json", "summary.md", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"], hex::encode(Sha256::digest(text.as_bytes())));
    assert!(manifest["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["versions"]["roughlab"].is_string());
}

#[test]
fn small_epsilon_guard_flags_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let body = MINIMAL_BODY.replace("checks = [\"lipschitz\"]", "checks = [\"cz\", \"admissibility\"]").replace("[0.125]", "[0.5]");
    let rep = run_text(&with_output(&out, &body), 1);
    let cz = rows(&out.join("cz.csv"));
    assert_eq!(cz.len(), 1);
    assert!(cz[0].flags.contains("precondition"), "{:?}", cz[0]);
    assert!(!rep.manifest.warnings.is_empty());
    // The unguarded check in the same cell still ran.
    assert!(rows(&out.join("admissibility.csv")).iter().all(|r| r.flags.is_empty()));
}

#[test]
fn failing_check_does_not_abort_other_cells() {
    // The iteration verifier needs radius 2; the Lipschitz check on the same cell and the other family are unaffected.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let body = format!(
        "{}\n[[family]]\nname = \"small\"\nepsilons = [0.125]\nradius = 1.5\ncurvature = 0.0\ndomain = {{ boundary = {{ kind = \"half_plane\" }} }}\n",
        MINIMAL_BODY.replace("checks = [\"lipschitz\"]", "checks = [\"lipschitz\", \"iteration\"]")
    );
    let rep = run_text(&with_output(&out, &body), 2);
    let it = rows(&out.join("iteration.csv"));
    assert!(it.iter().any(|r| r.family == "small" && r.flags.contains("error")));
    assert!(it.iter().any(|r| r.family == "flat" && !r.flags.contains("error")));
    let lip = rows(&out.join("lipschitz.csv"));
    assert!(lip.iter().any(|r| r.family == "small") && lip.iter().any(|r| r.family == "flat"));
    assert_eq!(rep.summary.check("small", CheckKind::Iteration).unwrap().verdict, Verdict::Fail);
}

#[test]
fn reruns_and_worker_counts_give_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
checks = ["lipschitz", "caccioppoli", "reverse_holder"]
seeds = [1, 2]

[coefficient]
preset = { kind = "laminate", mean = 2.0, amplitude = 1.0 }

[[family]]
name = "saw"
epsilons = [0.125, 0.0625]
curvature = 0.0
randomize_phase = true
domain = { boundary = { kind = "graph", micro_profile = { kind = "sawtooth", amplitude = 1.0 } } }
"#;
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_text(&with_output(&a, body), 1);
    run_text(&with_output(&b, body), 2);
    for f in ["lipschitz.csv", "caccioppoli.csv", "reverse_holder.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn plotdata_sorts_series_and_refits_the_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let body = r#"
[coefficient]
preset = { kind = "laminate", mean = 2.0, amplitude = 1.0 }

[[family]]
name = "flat"
epsilons = [0.125, 0.0625]
domain = { boundary = { kind = "half_plane" } }
checks = ["rate", "lipschitz"]
"#;
    let rep = run_text(&with_output(&out, body), 1);
    let files = plotdata(&out).unwrap();
    assert_eq!(files.len(), 2);
    let lip = std::fs::read_to_string(out.join("plotdata/lipschitz.dat")).unwrap();
    let mut points = 0;
    for block in lip.split("\n\n\n").filter(|b| !b.trim().is_empty()) {
        let r: Vec<f64> = block.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).map(|l| l.split(' ').next().unwrap().parse().unwrap()).collect();
        assert!(r.windows(2).all(|w| w[0] < w[1]), "{block}");
        points += r.len();
    }
    assert!(points > 2, "{lip}");
    let rate = std::fs::read_to_string(out.join("plotdata/rate.dat")).unwrap();
    let slope: f64 = rate.split("slope=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    let fitted = rep.summary.check("flat", CheckKind::Rate).unwrap().statistic;
    assert!((slope - fitted).abs() < 1e-5, "{slope} vs {fitted}");
}

#[test]
fn empty_check_selection_writes_no_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let body = MINIMAL_BODY.replace("checks = [\"lipschitz\"]", "checks = []");
    let rep = run_text(&with_output(&out, &body), 1);
    assert!(rep.manifest.csv.is_empty());
    assert!(plotdata(&out).unwrap().is_empty());
    assert!(!out.join("plotdata").exists());
}

#[test]
fn missing_csv_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_text(&with_output(&out, MINIMAL_BODY), 1);
    std::fs::remove_file(out.join("lipschitz.csv")).unwrap();
    match plotdata(&out) {
        Err(Error::MissingFile(p)) => assert!(p.ends_with("lipschitz.csv")),
        other => panic!("expected a missing-file error, got {other:?}"),
    }
}

#[test]
fn config_errors_carry_positions() {
    let text = "output_dir = \"x\"\n[coefficient.preset]\nkind = \"identity\"\n\n[[family]]\nname = \"f\"\nepsilons = [0.1]\nwobble = 3\ndomain = { boundary = { kind = \"half_plane\" } }\n";
    match ExperimentConfig::parse(text, Path::new("bad.toml")) {
        Err(Error::Parse { line, column, message, .. }) => {
            assert_eq!(line, 8, "{message}");
            assert!(column >= 1);
            assert!(message.contains("wobble"));
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    let coarse = MINIMAL_BODY.replace("kind = \"identity\"", "kind = \"laminate\"\namplitude = 1.0") + "\n[mesh]\nh_over_epsilon = 0.25\n";
    assert!(matches!(ExperimentConfig::parse(&with_output(Path::new("x"), &coarse), Path::new("c.toml")), Err(Error::Config(_))));
}

#[test]
fn cli_reports_parse_errors_and_honours_output_root() {
    let exe = env!("CARGO_BIN_EXE_roughlab");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "output_dir = \"x\"\nchecks = [\"lipschitz\"\n").unwrap();
    let o = Command::new(exe).args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:"), "{err}");

    let good = dir.path().join("minimal.toml");
    std::fs::write(&good, format!("output_dir = \"rel\"\n{MINIMAL_BODY}")).unwrap();
    let o = Command::new(exe).args(["run", good.to_str().unwrap(), "--dry-run"]).env(OUTPUT_ROOT_ENV, dir.path()).output().unwrap();
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("flat") && stdout.contains("lipschitz"), "{stdout}");
    assert!(!dir.path().join("rel").exists(), "dry run wrote output");

    let o = Command::new(exe).args(["run", good.to_str().unwrap(), "--workers", "1"]).env(OUTPUT_ROOT_ENV, dir.path()).env("RUST_LOG", "warn").output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("rel/lipschitz.csv").is_file());
    let o = Command::new(exe).args(["plotdata", dir.path().join("rel").to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("rel/plotdata/lipschitz.dat").is_file());
}
