use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dppbo_harness::oracle::{run_suite, Suite};
use dppbo_harness::output::{read_aggregate_csv, read_label, write_outputs, AGGREGATE_FILE};
use dppbo_harness::plot::{render_svg, Series};
use dppbo_harness::{run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dppbo", about = "Batch Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated experiment and write runs.csv, aggregate.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for replications.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Plot simple regret from aggregate.csv files found in DIR and its subdirectories.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log_y: bool,
    },
    /// Run exact small-domain sampler checks.
    OracleCheck {
        /// enumeration, detailed-balance, reweighting or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, parallel: usize) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let dir = out
        .or_else(|| config.output_dir.clone())
        .context("no output directory: pass --out or set output_dir")?;
    let runs = run_experiment(&config, Some(parallel))?;
    let agg = write_outputs(&dir, &config, &runs)?;
    let failed = runs.iter().filter(|r| !r.succeeded()).count();
    if let Some(last) = agg.last() {
        println!(
            "{}: final simple regret {:.6} ± {:.6} over {} runs",
            config.label(),
            last.mean_simple,
            last.se_simple,
            last.n_runs
        );
    }
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see manifest.json", runs.len());
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn load_series(dir: &Path) -> anyhow::Result<Option<Series>> {
    let path = dir.join(AGGREGATE_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let rows = read_aggregate_csv(fs::File::open(&path)?)
        .with_context(|| format!("reading {}", path.display()))?;
    let label = read_label(dir).unwrap_or_else(|| {
        dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    });
    Ok(Some(Series { label, rows }))
}

fn plot(input: &Path, out: &Path, log_y: bool) -> anyhow::Result<()> {
    let mut series: Vec<Series> = load_series(input)?.into_iter().collect();
    let mut subdirs: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        series.extend(load_series(&d)?);
    }
    if series.is_empty() {
        bail!("no {AGGREGATE_FILE} found under {}", input.display());
    }
    fs::write(out, render_svg(&series, log_y))?;
    println!("wrote {} ({} series)", out.display(), series.len());
    Ok(())
}

fn oracle_check(suite: &str, seed: u64) -> anyhow::Result<bool> {
    let suite: Suite = suite.parse()?;
    let mut ok = true;
    for r in run_suite(suite, seed)? {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{status} {}: {:.3e} (tolerance {:.1e})", r.name, r.value, r.tolerance);
        ok &= r.passed();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            parallel,
        } => run(&config, seed, out, parallel).map(|_| true),
        Command::Plot { input, out, log_y } => plot(&input, &out, log_y).map(|_| true),
        Command::OracleCheck { suite, seed } => oracle_check(&suite, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
