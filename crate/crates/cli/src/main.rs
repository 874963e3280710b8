//! `specweights <command> --config <file> [--plot] [--jobs N] [--out DIR]`
//!
//! Exit status: 0 on success (including certificates whose verdict is
//! fail), 1 on I/O failure, 2 on schema errors, 3 on numerical failures.

mod load;
mod output;
mod run;

use clap::{Parser, ValueEnum};
use serde_json::json;
use specweights_core::config::Command;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Cheeger,
    Family,
    Certify,
    Optimize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Cheeger => Command::Cheeger,
            Cmd::Family => Command::Family,
            Cmd::Certify => Command::Certify,
            Cmd::Optimize => Command::Optimize,
        }
    }
}

#[derive(Parser)]
#[command(name = "specweights", version, about = "Weighted Neumann eigenvalue workbench")]
struct Args {
    command: Cmd,
    /// JSON run configuration (`"spec_version": 1`).
    #[arg(long)]
    config: PathBuf,
    /// Also write an SVG line plot of the sweep table.
    #[arg(long)]
    plot: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_IO: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    let command: Command = args.command.into();
    if let Some(n) = args.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_SCHEMA);
        }
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let env_seed = std::env::var("SPECWEIGHTS_SEED").ok();
    let loaded = match load::load(&args.config, command, env_seed.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("schema error: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| loaded.config.out.as_ref().map(|o| loaded.base.join(o)))
        .unwrap_or_else(|| PathBuf::from("."));
    let name = run::artifact_name(&loaded.config, command);
    let json_path = out_dir.join(format!("{name}.json"));
    let io_fail = |e: std::io::Error, what: &std::path::Path| {
        eprintln!("error: cannot write {}: {e}", what.display());
        ExitCode::from(EXIT_IO)
    };

    match run::execute(&loaded.config, command, loaded.seed) {
        Ok(outcome) => {
            let mut report = outcome.report;
            report["status"] = json!("ok");
            report["command"] = json!(command.name());
            let csv_path = out_dir.join(format!("{}.csv", outcome.name));
            let csv = match output::csv_bytes(&outcome.rows) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: CSV encoding failed: {e}");
                    return ExitCode::from(EXIT_IO);
                }
            };
            if let Err(e) = output::write_atomic(&csv_path, &csv) {
                return io_fail(e, &csv_path);
            }
            if let Err(e) = output::write_atomic(&json_path, &output::json_bytes(&report)) {
                return io_fail(e, &json_path);
            }
            if args.plot {
                let svg_path = out_dir.join(format!("{}.svg", outcome.name));
                let svg = output::svg(&outcome.name, outcome.x_label, &outcome.rows);
                if let Err(e) = output::write_atomic(&svg_path, svg.as_bytes()) {
                    return io_fail(e, &svg_path);
                }
            }
            match report.get("verdict").and_then(|v| v.as_str()) {
                Some(v) => println!("{name}: verdict {v} ({})", csv_path.display()),
                None => println!("{name}: {} rows ({})", outcome.rows.len(), csv_path.display()),
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let report = json!({
                "status": "error",
                "command": command.name(),
                "name": name,
                "error": err.to_string(),
                "error_debug": format!("{err:?}"),
            });
            eprintln!("numerical failure: {err}");
            if let Err(e) = output::write_atomic(&json_path, &output::json_bytes(&report)) {
                return io_fail(e, &json_path);
            }
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
