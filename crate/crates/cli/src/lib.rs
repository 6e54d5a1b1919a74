//! Command-line front end for the cavity solvers: configuration, method
//! dispatch, sweeps, comparisons and CSV/JSON/SVG output.

pub mod cli;
pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod solve;
pub mod svg;
pub mod sweep;

pub use cli::{Cli, Command, Context};
pub use error::{CliError, Result};

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Context::from_cli(cli)?;
    match &cli.command {
        Command::Simulate {
            params,
            grid,
            method,
        } => commands::simulate(&ctx, params, grid, *method),
        Command::Reflectance(args) => commands::reflectance(&ctx, args),
        Command::Poles { params, count } => commands::poles(&ctx, params, *count),
        Command::Fom { params } => commands::fom(&ctx, params),
        Command::Presets => commands::presets(&ctx),
        Command::Sweep(args) => sweep::sweep(&ctx, args),
        Command::Compare {
            params,
            grid,
            methods,
        } => compare::compare(&ctx, params, grid, methods),
    }
}
