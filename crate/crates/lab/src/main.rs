use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dirac_clock_lab::experiments::CATALOG;
use dirac_clock_lab::runner::{exit_code_of, out_root, run_all, run_config, RunResult};

#[derive(Parser)]
#[command(name = "dirac-clock", version, about = "Lattice experiments for the Dirac time operator")]
struct Cli {
    /// Output root; defaults to $DIRAC_CLOCK_OUT, then `out`.
    #[arg(long, global = true)]
    out_root: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every `*.cfg` in a directory.
    RunAll {
        dir: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the experiment catalog.
    List,
}

fn report(r: &RunResult) {
    let line = format!("[{}] {}: {}", r.exit_code, r.config.display(), r.message);
    if r.exit_code == 0 {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = cli.out_root.unwrap_or_else(out_root);
    let code = match cli.cmd {
        Cmd::List => {
            for e in CATALOG {
                println!("{}: {}  ({})", e.name, e.anchor, e.about);
            }
            0
        }
        Cmd::Run { config } => {
            let r = run_config(&config, &root);
            report(&r);
            r.exit_code
        }
        Cmd::RunAll { dir, jobs } => {
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            match run_all(&dir, &root, jobs) {
                Ok(rs) => {
                    rs.iter().for_each(report);
                    exit_code_of(&rs)
                }
                Err(e) => {
                    eprintln!("cannot read {}: {e}", dir.display());
                    2
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
