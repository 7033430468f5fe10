//! holoscale: run scaling experiments from `.cdl` files and verify the
//! checked-in corpus against its golden reports.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 configuration error,
//! 3 numerical failure.

use clap::{Parser, Subcommand};
use holoscale_core::dsl::{parse_config, ScalingMode};
use holoscale_core::{pipeline, Config};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "holoscale", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Frankel,
    Variety,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment file and write report.json plus series files.
    Run {
        /// Path to the .cdl experiment file
        config: PathBuf,
        /// Output directory (default: $HOLOSCALE_OUT or `./out/<name>`)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the sampling seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the upper index of the window
        #[arg(long)]
        jmax: Option<u32>,
        /// Scaling mode (auto picks from the case classification)
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Suppress the summary line
        #[arg(long)]
        quiet: bool,
    },
    /// Re-run every corpus config twice and diff against the goldens.
    Verify {
        /// Directory containing *.cdl files and a golden/ subdirectory
        corpus: PathBuf,
        /// Override the sampling seed (then only verdict fields are compared)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, jmax, mode, quiet } => run_cmd(&config, out, seed, jmax, mode, quiet),
        Command::Verify { corpus, seed, quiet } => verify_cmd(&corpus, seed, quiet),
    }
}

fn load_config(path: &Path) -> Result<Config, String> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "experiment".into());
    let src = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&src, &name).map_err(|e| e.to_string())
}

fn apply_overrides(cfg: &mut Config, seed: Option<u64>, jmax: Option<u32>, mode: Option<ModeArg>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(j) = jmax {
        cfg.j_max = j;
    }
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Frankel => ScalingMode::Frankel,
            ModeArg::Variety => ScalingMode::Variety,
            ModeArg::Auto => ScalingMode::Auto,
        };
    }
}

fn run_cmd(
    path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jmax: Option<u32>,
    mode: Option<ModeArg>,
    quiet: bool,
) -> ExitCode {
    let mut cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    apply_overrides(&mut cfg, seed, jmax, mode);
    if let Err(e) = cfg.validate() {
        eprintln!("configuration error: {e}");
        return ExitCode::from(2);
    }
    let output = match pipeline::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(3);
        }
    };

    let out_dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("HOLOSCALE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    if let Err(e) = write_outputs(&out_dir, &output) {
        eprintln!("numerical failure: cannot write outputs: {e}");
        return ExitCode::from(3);
    }
    if !quiet {
        let v = &output.report.verdicts;
        println!(
            "{}: case={} normality={} type={} limit={} -> {}",
            cfg.name,
            v.case,
            v.normality,
            v.type_kind,
            v.limit,
            out_dir.display()
        );
    }
    ExitCode::SUCCESS
}

fn write_outputs(dir: &Path, output: &pipeline::RunOutput) -> std::io::Result<()> {
    let series = dir.join("series");
    std::fs::create_dir_all(&series)?;
    std::fs::write(dir.join("report.json"), output.report.to_json())?;
    std::fs::write(series.join("diagnostics.csv"), &output.series_csv)?;
    if let Some(cloud) = &output.final_cloud {
        std::fs::write(series.join("cloud_final.txt"), cloud)?;
    }
    if let Some(cloud) = &output.target_cloud {
        std::fs::write(series.join("cloud_target.txt"), cloud)?;
    }
    Ok(())
}

fn verify_cmd(corpus: &Path, seed: Option<u64>, quiet: bool) -> ExitCode {
    let entries = match corpus_entries(corpus) {
        Ok(e) => e,
        Err(msg) => {
            eprintln!("corpus missing: {msg}");
            return ExitCode::from(2);
        }
    };
    if entries.is_empty() {
        eprintln!("corpus missing: no .cdl files in {}", corpus.display());
        return ExitCode::from(2);
    }
    let mut failures = 0usize;
    for path in entries {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let golden_path = corpus.join("golden").join(format!("{name}.report.json"));
        let status = verify_one(&path, &golden_path, seed);
        match status {
            Ok(msg) => {
                if !quiet {
                    println!("verify {name}: PASS {msg}");
                }
            }
            Err(msg) => {
                failures += 1;
                println!("verify {name}: FAIL {msg}");
            }
        }
    }
    if failures > 0 {
        eprintln!("verify: {failures} corpus entr{} failed", if failures == 1 { "y" } else { "ies" });
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn corpus_entries(corpus: &Path) -> Result<Vec<PathBuf>, String> {
    let rd = std::fs::read_dir(corpus).map_err(|e| format!("{}: {e}", corpus.display()))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "cdl"))
        .collect();
    out.sort();
    Ok(out)
}

fn verify_one(path: &Path, golden_path: &Path, seed: Option<u64>) -> Result<String, String> {
    let mut cfg = load_config(path).map_err(|e| format!("(config) {e}"))?;
    let verdicts_only = match seed {
        Some(s) if s != cfg.seed => {
            cfg.seed = s;
            true
        }
        _ => false,
    };
    cfg.validate().map_err(|e| format!("(config) {e}"))?;

    // determinism: two fresh runs must agree bit for bit (timings aside)
    let first = pipeline::run(&cfg).map_err(|e| format!("(run) {e}"))?;
    let second = pipeline::run(&cfg).map_err(|e| format!("(rerun) {e}"))?;
    let a = first.report.to_comparable_json();
    let b = second.report.to_comparable_json();
    if a != b {
        return Err("(determinism) two runs differ".into());
    }

    let golden_src = std::fs::read_to_string(golden_path)
        .map_err(|e| format!("(golden) cannot read {}: {e}", golden_path.display()))?;
    let golden: serde_json::Value =
        serde_json::from_str(&golden_src).map_err(|e| format!("(golden) invalid json: {e}"))?;
    let fresh: serde_json::Value =
        serde_json::from_str(&first.report.to_json()).map_err(|e| format!("(fresh) {e}"))?;
    match holoscale_core::report::diff_reports(&golden, &fresh, 1e-6, verdicts_only) {
        None => Ok(if verdicts_only { "(verdicts only)".into() } else { String::new() }),
        Some(field) => Err(format!("(diff) field `{field}` differs from golden")),
    }
}
