//! The pipeline behind the `hetwave` binary: load a config, run it and
//! write the report, the profile and the plot.

use std::path::{Path, PathBuf};

use hetwave::run::{run, write_outputs, RunConfig};

fn main() -> hetwave::Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let name = std::env::args().nth(1).unwrap_or_else(|| "nagumo.json".into());
    let cfg = RunConfig::load(&configs.join(&name))?;
    let out_dir = std::env::args().nth(2).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let out = run(&cfg, &configs)?;
    for path in write_outputs(&out, &out_dir)? {
        println!("wrote {}", path.display());
    }
    for check in &out.report.checks {
        println!(
            "{:<28} {:>12.4e} {} {:<10.3e} {}",
            check.name,
            check.value,
            check.relation,
            check.threshold,
            if check.pass { "ok" } else { "FAIL" }
        );
    }
    println!("exit code {}", out.report.exit_code());
    Ok(())
}
