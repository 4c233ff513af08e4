mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::{dispatch, Verdict};
use crate::config::{Cli, RunConfig};
use crate::output::OutputDir;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SMECTIC_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("SMECTIC_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            anyhow::bail!("SMECTIC_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    init_threads()?;
    let cfg = RunConfig::resolve(cli)?;
    let mut out = OutputDir::create(&cfg.out)?;
    let code = match dispatch(&cfg, &mut out) {
        Ok(Verdict::Pass) => EXIT_PASS,
        Ok(Verdict::Fail) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    out.finish(&cfg, code.into())?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
