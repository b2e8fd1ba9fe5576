//! Command-line harness around the `microevo` library.

pub mod args;
pub mod commands;
pub mod config;
pub mod failure;

use args::{Cli, Command};
use failure::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.parallel {
        if n == 0 {
            return Err(CliError::Config("--parallel must be at least 1".into()));
        }
        // A second call (e.g. in-process tests) keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = cli.config.as_deref();
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(a, config, out, cli.seed),
        Command::Dataset(a) => commands::dataset::run(a, config, out, cli.seed),
        Command::Baseline(a) => commands::baseline::run(a, config, out),
        Command::Score(a) => commands::score::run(a, config, out),
        Command::Render(a) => commands::render::run(a, config, out),
    }
}
