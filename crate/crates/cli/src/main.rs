mod args;
mod commands;
mod setup;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use fracrom::Error;

use args::{Cli, Command};

const EXIT_NUMERICAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Bad flags or inputs, detected before any computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// An iterative method that did not converge.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidOrder(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::NonPositiveDiffusion { .. }
            | Error::AnisotropicTensor { .. }
            | Error::RankExceeded { .. }
            | Error::MalformedFile { .. }
            | Error::ChecksumMismatch { .. }
            | Error::Manifest(_)
            | Error::Expression(_),
        ) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn init_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var("FRAC_ROM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("FRAC_ROM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(e.to_string()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match &cli.command {
        Command::FomSolve(a) => commands::fom_solve(a),
        Command::Snapshots(a) => commands::snapshots(a),
        Command::BuildRom(a) => commands::build_rom(a),
        Command::RomSolve(a) => commands::rom_solve_cmd(a),
        Command::Identify(a) => commands::identify_cmd(a, cli.seed),
        Command::ReproduceTable(a) => commands::reproduce(a, cli.seed),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on its own parse errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&UsageError("x".into()).into()), EXIT_USAGE);
        assert_eq!(exit_code(&NumericalFailure("x".into()).into()), EXIT_NUMERICAL);
        assert_eq!(
            exit_code(
                &Error::RankExceeded {
                    requested: 3,
                    available: 2
                }
                .into()
            ),
            EXIT_USAGE
        );
        assert_eq!(exit_code(&Error::Singular("reduced Jacobian").into()), EXIT_NUMERICAL);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["fracrom", "--seed", "7", "reproduce-table", "5"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert!(matches!(cli.command, Command::ReproduceTable(ref a) if a.table == 5 && !a.rom_only));
        assert!(Cli::try_parse_from(["fracrom", "reproduce-table", "0"]).is_err());
        assert!(Cli::try_parse_from(["fracrom", "identify", "m.toml", "--forward", "exact"]).is_err());
    }
}
