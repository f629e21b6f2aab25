use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hetwave::run::{error_exit_code, run, write_outputs, Mode, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "hetwave", version, about = "Heteroclinic travelling waves by constrained minimization")]
struct Cli {
    #[command(subcommand)]
    mode: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probe the potential and check the hypotheses.
    Validate(Args),
    /// Compute the speed and the wave, then verify the identities.
    Solve(Args),
    /// Evolve a step datum and measure the front speed.
    Semiflow(Args),
    /// Solve and evolve, and compare the two speeds.
    All(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and the profiles.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.mode {
        Command::Validate(a) => (Mode::Validate, a),
        Command::Solve(a) => (Mode::Solve, a),
        Command::Semiflow(a) => (Mode::Semiflow, a),
        Command::All(a) => (Mode::All, a),
    };
    if let Some(n) = std::env::var("HETWAVE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("hetwave: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let code = match execute(mode, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hetwave: {e}");
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn execute(mode: Mode, args: &Args) -> hetwave::Result<i32> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.mode = mode;
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let out = run(&cfg, &base)?;
    for path in write_outputs(&out, &args.out)? {
        println!("wrote {}", path.display());
    }
    let report = &out.report;
    if let Some(s) = &report.speed {
        println!("c* = {:.6}  action = {:+.3e}", s.c_star, s.action_at_c_star);
    }
    if let Some(s) = &report.semiflow {
        println!("front speed = {:.6}", s.trace.fitted_speed);
    }
    for c in report.failed_checks() {
        println!("FAIL {}: {:e} (needs {} {:e})", c.name, c.value, c.relation, c.threshold);
    }
    println!("{}", if report.pass { "pass" } else { "fail" });
    Ok(report.exit_code())
}
