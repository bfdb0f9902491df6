//! A complete configured run: CSVs, summary and manifest under a temporary directory.
use roughlab::experiment::config::ExperimentConfig;
use roughlab::experiment::plotdata::plotdata;
use roughlab::experiment::runner::{run, RunOptions};
use std::error::Error;
use std::path::Path;

const CONFIG: &str = r#"
checks = ["lipschitz", "caccioppoli", "convexity"]
seeds = [1, 2]

[coefficient]
preset = { kind = "laminate", mean = 2.0, amplitude = 1.0 }

[[family]]
name = "sawtooth"
epsilons = [0.125, 0.0625]
curvature = 0.0
randomize_phase = true
domain = { boundary = { kind = "graph", micro_profile = { kind = "sawtooth", amplitude = 1.0 } } }
"#;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let text = format!("output_dir = {:?}\n{CONFIG}", dir.path().join("run").display().to_string());
    let cfg = ExperimentConfig::parse(&text, Path::new("sweep.toml"))?;
    let report = run(&cfg, &text, Path::new("sweep.toml"), &RunOptions { workers: Some(2) })?;
    print!("{}", report.summary.to_markdown());
    for entry in &report.manifest.csv {
        println!("{}: {} rows", entry.file, entry.rows);
    }
    for file in plotdata(&report.output_dir)? {
        println!("plot series {}", file.display());
    }
    Ok(())
}
