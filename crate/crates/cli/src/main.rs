mod args;
mod commands;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, CommonArgs};
use commands::Payload;

/// Malformed command-line input that the core library never sees.
#[derive(Debug)]
pub struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(InputError(format!("{e:#}")))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qcs_core::Error>() {
            return if e.is_input_error() { 2 } else { 3 };
        }
    }
    3
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Qcs(a) => &a.state.common,
        Command::Evolve(a) => &a.state.common,
        Command::Halflife(a) => &a.state.common,
        Command::Interference(a) => &a.state.common,
        Command::Wigner(a) | Command::Kernel(a) => &a.state.common,
        Command::Validate(a) => &a.common,
    }
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = common(&cli.command).clone();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(input_error(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let payload = match &cli.command {
        Command::Qcs(a) => commands::qcs(a)?,
        Command::Evolve(a) => commands::evolve(a)?,
        Command::Halflife(a) => commands::halflife(a)?,
        Command::Interference(a) => commands::interference(a)?,
        Command::Wigner(a) => commands::wigner(a)?,
        Command::Kernel(a) => commands::kernel(a)?,
        Command::Validate(a) => commands::validate(a)?,
    };
    let out = common.out.as_deref();
    match payload {
        Payload::Text(text) => write_out(out, text.as_bytes()),
        Payload::Raster { bytes, config } => {
            write_out(out, &bytes)?;
            if let Some(p) = out {
                let side = p.with_extension("json");
                let text = serde_json::to_string_pretty(&serde_json::json!({ "config": config }))?;
                std::fs::write(&side, text + "\n")
                    .with_context(|| format!("writing {}", side.display()))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
