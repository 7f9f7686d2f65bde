use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use serde::Serialize;

use mixcolor_core::harness::{self, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    NoiselessPhase,
    NoiselessRuntime,
    RobustSample,
    RobustRuntime,
    Perturbation,
    DevoOptimize,
    SingleRun,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::NoiselessPhase => "noiseless-phase",
            Mode::NoiselessRuntime => "noiseless-runtime",
            Mode::RobustSample => "robust-sample",
            Mode::RobustRuntime => "robust-runtime",
            Mode::Perturbation => "perturbation",
            Mode::DevoOptimize => "devo-optimize",
            Mode::SingleRun => "single-run",
        }
    }
}

/// Runs mixed-coloring experiments and writes one CSV per run.
#[derive(Debug, Parser)]
#[command(name = "mixcolor", version)]
struct Args {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for concurrent trials
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed; trial t uses mix(seed, t)
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (default: <mode>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &Args) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing config {}", args.config.display()))?;
    // flags win over the file
    if let Some(j) = args.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.to_string_lossy().into_owned());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("opening output {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run(args: &Args) -> Result<()> {
    let cfg = load_config(args)?;
    let out = PathBuf::from(
        cfg.out
            .clone()
            .unwrap_or_else(|| format!("{}.csv", args.mode.name())),
    );
    match args.mode {
        Mode::NoiselessPhase => {
            let rows = harness::noiseless_phase(&cfg)?;
            for r in &rows {
                println!(
                    "L={} n={} K={} M={} m={}: {}/{} ({:.2})",
                    r.l, r.n, r.k, r.bins, r.m, r.successes, r.trials, r.success_rate
                );
            }
            write_csv(&out, &rows)?;
        }
        Mode::NoiselessRuntime => {
            let rows = harness::noiseless_runtime(&cfg)?;
            for r in &rows {
                println!(
                    "n={} K={} M={}: {}/{} ok, mean decode {:.3} ms",
                    r.n,
                    r.k,
                    r.bins,
                    r.successes,
                    r.trials,
                    r.mean_decode_ns / 1e6
                );
            }
            write_csv(&out, &rows)?;
        }
        Mode::RobustSample => {
            let rows = harness::robust_sample(&cfg)?;
            for r in &rows {
                println!(
                    "n={} K={} N={} M={} m={}: {}/{}",
                    r.n, r.k, r.repetitions, r.bins, r.m, r.successes, cfg.trials
                );
            }
            write_csv(&out, &rows)?;
        }
        Mode::RobustRuntime => {
            let rows = harness::robust_runtime(&cfg)?;
            for r in &rows {
                println!(
                    "n={} K={} N={} m={}: {}/{} ok, mean decode {:.3} ms",
                    r.n,
                    r.k,
                    r.repetitions,
                    r.m,
                    r.successes,
                    cfg.trials,
                    r.mean_decode_ns / 1e6
                );
            }
            write_csv(&out, &rows)?;
        }
        Mode::Perturbation => {
            let rows = harness::perturbation(&cfg)?;
            for r in &rows {
                println!(
                    "M={} d={} perturbation={:.2}: {}/{} ({:.2})",
                    r.bins, r.d, r.perturbation, r.successes, r.trials, r.success_rate
                );
            }
            write_csv(&out, &rows)?;
        }
        Mode::DevoOptimize => {
            let rows = harness::devo_optimize(&cfg)?;
            match rows.first() {
                Some(b) => println!(
                    "L={}: best (d,R,V,c) = ({},{},{},{:.2}), m/K = {:.2}, p* = {:.2e}",
                    cfg.l, b.d, b.r, b.v, b.c, b.m_over_k, b.p_star
                ),
                None => println!("L={}: no feasible parameters in the search ranges", cfg.l),
            }
            write_csv(&out, &rows)?;
        }
        Mode::SingleRun => {
            let (row, ms) = harness::single_run(&cfg)?;
            if let (Some(path), Some(ms)) = (&cfg.measurements_out, &ms) {
                fs::write(path, serde_json::to_string(ms)?)
                    .with_context(|| format!("writing measurements {path}"))?;
            }
            println!("{}", serde_json::to_string_pretty(&row)?);
            write_csv(&out, std::slice::from_ref(&row))?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() {
    let args = Args::parse();
    if let Err(e) = run(&args) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
