//! Command-line front end. The experiment contract (config schema, CSV
//! columns, exit codes) lives in [`expsumlab::cli`]; this file only parses
//! arguments, owns the worker pool, and reports outcomes.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use expsumlab::cli::{self, Command as Tag, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "expsumlab",
    version,
    about = "Exponential-sum laboratory: moments, arcs, level sets and decoupling ratios at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path config override, e.g. --set curve.family=power (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory for rows.csv and summary.json (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 keeps the library default (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Window condition constants of the configured curve.
    Conditions(Common),
    /// Full even moment over the conjecture box, one row per scale.
    Moment(Common),
    /// Bilinear sixth moment over two separated intervals.
    BilinearMoment(Common),
    /// Moment pipeline across the exponent presets, with fitted slopes.
    SweepAlpha(Common),
    /// Exact tuple count backing the moment engine.
    OracleCount(Common),
    /// Arc bound, off-arc collapse and Poisson reconstruction of Weyl sums.
    WeylVerify(Common),
    /// Sublevel-measure product cap over random tilt pairs.
    LevelsetVerify(Common),
    /// Local moment allowance across dyadic levels.
    #[command(name = "lemma76")]
    Lemma76(Common),
    /// Constructive block lower bound, one row per scale.
    LowerBound(Common),
    /// Decoupling-style ratio measurements.
    Decouple(Common),
    /// Block rescaling identity on random blocks and points.
    RescaleIdentity(Common),
}

fn main() -> ExitCode {
    let parsed = Cli::parse();
    let (tag, common) = match parsed.cmd {
        Cmd::Conditions(c) => (Tag::Conditions, c),
        Cmd::Moment(c) => (Tag::Moment, c),
        Cmd::BilinearMoment(c) => (Tag::BilinearMoment, c),
        Cmd::SweepAlpha(c) => (Tag::SweepAlpha, c),
        Cmd::OracleCount(c) => (Tag::OracleCount, c),
        Cmd::WeylVerify(c) => (Tag::WeylVerify, c),
        Cmd::LevelsetVerify(c) => (Tag::LevelsetVerify, c),
        Cmd::Lemma76(c) => (Tag::Lemma76, c),
        Cmd::LowerBound(c) => (Tag::LowerBound, c),
        Cmd::Decouple(c) => (Tag::Decouple, c),
        Cmd::RescaleIdentity(c) => (Tag::RescaleIdentity, c),
    };
    ExitCode::from(run(tag, common) as u8)
}

fn run(tag: Tag, common: Common) -> i32 {
    let mut cfg: ExperimentConfig = match cli::load_config(&common.config, &common.set) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(out) = common.out {
        cfg.out = out;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if cfg.workers > 0 {
        // The pool must exist before the first parallel operation; the
        // result only errs if a pool was already installed, which cannot
        // happen on this straight-line path.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }
    let started = Instant::now();
    let output = match cli::run(tag, &cfg) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    let paths = match cli::write_reports(&cfg, tag, &output, wall_ms) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for a in &output.assertions {
        println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    for (name, slope) in &output.slopes {
        println!("slope {name}: {slope:.4}");
    }
    println!("{} rows -> {}", output.rows.len(), paths.rows.display());
    if output.pass() {
        0
    } else {
        1
    }
}
