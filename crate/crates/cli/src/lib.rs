//! Configuration-driven runner for the set-indexed partial-sum experiments.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{ConfigDocument, Kind};
pub use error::CliError;
pub use runner::{execute, Outcome};
use setsum::diagnostics::{overall_verdict, Verdict};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SETSUM_OUT";

/// `$SETSUM_OUT/<kind>` or `results/<kind>`.
pub fn default_out_dir(kind: Kind) -> PathBuf {
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(kind.name())
}

/// Runs `doc` on a pool of `threads` workers (machine parallelism when
/// `None`) and writes its artifacts to `out`.
pub fn run(doc: &ConfigDocument, out: &Path, threads: Option<usize>) -> Result<Outcome, CliError> {
    let outcome = with_threads(threads, || execute(doc))??;
    output::write(&outcome, out)?;
    Ok(outcome)
}

pub fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// 0 pass, 2 any failure, 3 inconclusive without failures.
pub fn exit_code(outcome: &Outcome) -> u8 {
    match overall_verdict(&outcome.reports) {
        Verdict::Pass => 0,
        Verdict::Fail => 2,
        Verdict::Inconclusive => 3,
    }
}
