use clap::Parser;
use hplane_cli::{parse_config, run, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Discrete H-planes in hyperbolic space: solve, exhaust, verify.
#[derive(Parser)]
#[command(name = "hplane", version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", args.config.display())))
        .and_then(|t| parse_config(&t));
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code().max(1) as u8);
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    let out = args.out.unwrap_or_else(|| cfg.output.clone());
    let report = run(&cfg, &out);
    for c in &report.checks {
        println!("{:<20} {} violation {:.3e} (tol {:.1e})", c.name, if c.pass { "pass" } else { "FAIL" }, c.violation, c.tolerance);
    }
    if let Some(e) = &report.error {
        eprintln!("{e}");
    }
    println!("report: {}", out.join(hplane_cli::run::REPORT_FILE).display());
    ExitCode::from(report.exit_code as u8)
}
