use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ergoprop_cli::{apply_overrides, run, RunConfig, RunError, SEED_ENV};

/// Run one ergoprop experiment and write its CSV tables and manifest.
///
/// Exit status: 0 when every check passes, 1 when a check fails or the
/// experiment errors, 2 on a configuration error.
#[derive(Parser)]
#[command(name = "ergoprop", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Experiment name; overrides `experiment` in the config.
    #[arg(long)]
    experiment: Option<String>,
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = std::env::var(SEED_ENV).ok();
    let cfg = match RunConfig::load(&cli.config)
        .and_then(|c| apply_overrides(c, cli.experiment.as_deref(), seed.as_deref()))
    {
        Ok(c) => c,
        Err(e) => return fail(e.into()),
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    let out = cli.out.unwrap_or_else(|| cfg.output.clone());
    match run(&cfg, &out) {
        Ok(manifest) => {
            for c in &manifest.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {} (measured {:e}, threshold {:e}; {})", c.name, c.measured, c.threshold, c.detail);
            }
            println!("wrote {} files to {}", manifest.files.len() + 2, out.display());
            if manifest.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}
