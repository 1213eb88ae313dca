//! Command-line front end for the `degeneracy` crate.
//!
//! `gen` writes XYZ files; every other command emits a [`ReportEnvelope`] as
//! JSON, CSV or text. See [`run`] for the exit-code contract.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod xyz;

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

pub use args::Cli;
pub use error::{CliError, Result};
pub use report::{Payload, ReportEnvelope};

use args::Command;

/// What a command produced, before it is written anywhere.
#[derive(Debug)]
pub enum Output {
    Cloud(degeneracy::PointCloud),
    Report(Box<ReportEnvelope>),
}

fn envelope<P: serde::Serialize>(
    command: &'static str,
    seed: u64,
    params: &P,
    payload: Payload,
) -> Output {
    Output::Report(Box::new(ReportEnvelope {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        params: serde_json::to_value(params).expect("arguments are serializable"),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        payload,
    }))
}

/// Runs a parsed command without touching stdout or the filesystem output.
pub fn execute(cli: &Cli) -> Result<Output> {
    let seed = cli.seed;
    let work = || match &cli.command {
        Command::Gen(a) => commands::gen(a, seed).map(Output::Cloud),
        Command::Detect(a) => Ok(envelope("detect", seed, a, commands::detect(a, seed)?)),
        Command::Expect(a) => Ok(envelope("expect", seed, a, commands::expect(a)?)),
        Command::Table(a) => Ok(envelope("table", seed, a, commands::table(a)?)),
        Command::Mc(a) => Ok(envelope("mc", seed, a, commands::mc(a, seed)?)),
    };
    match cli.threads {
        Some(0) => Err(CliError::invalid("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::invalid("--threads", e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Executes `cli` and writes the result to `--out` or stdout.
///
/// Errors map to exit codes through [`CliError::exit_code`]: 2 for usage and
/// validation, 3 for I/O, 4 when exhaustive counting would exceed its cap.
pub fn run(cli: &Cli) -> Result<()> {
    let bytes = match execute(cli)? {
        Output::Cloud(cloud) => {
            let mut buf = Vec::new();
            xyz::write_xyz(&cloud, &mut buf).expect("writing to memory cannot fail");
            buf
        }
        Output::Report(report) => report::render(&report, cli.format).into_bytes(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
