use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qcmod_cli::{run, write_outputs, ExperimentConfig, RunOptions, Status};

/// Run qcmod experiments from a JSON configuration.
#[derive(Parser, Debug)]
#[command(name = "qcmod", version)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiments run concurrently, up to this many at a time.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed for property checks that sample random points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();

    let config = match ExperimentConfig::from_file(&args.config).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qcmod: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        jobs: args.jobs.max(1),
        seed: args.seed,
    };
    let mut report = match run(&config, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qcmod: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = args.out.unwrap_or_else(|| config.output_dir.clone());
    match write_outputs(&mut report, &dir) {
        Ok(files) => {
            for f in &files {
                log::info!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("qcmod: {e}");
            return ExitCode::from(2);
        }
    }
    for r in &report.results {
        let tag = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        println!("{tag:5} {:<24} {:<15} {:>8.2}s", r.name, r.experiment, r.wall_clock_s);
        for c in r.contracts.iter().filter(|c| !c.passed) {
            println!("      ✗ {}: {}", c.name, c.detail);
        }
        if let Some(e) = &r.error {
            println!("      ✗ {e}");
        }
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
