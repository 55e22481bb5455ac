mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use conepack_core::{parallel, Error};

use args::{Cli, Command};
use manifest::Recorder;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownEntry { .. } => EXIT_USAGE,
        Error::Io(_) | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn run(cli: &Cli) -> conepack_core::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        parallel::configure_threads(n);
    }
    let mut rec = Recorder::new(commands::name(&cli.command), cli.threads);
    match &cli.command {
        Command::Optimize(a) => commands::optimize(a, &mut rec)?,
        Command::Lattice(a) => commands::lattice(a, &mut rec)?,
        Command::Ser(a) => commands::ser(a, &mut rec)?,
        Command::Mi(a) => commands::mi(a, &mut rec)?,
        Command::Gains(a) => commands::gains(a, &mut rec)?,
        Command::ZeroCrossings(a) => commands::zero_crossings(a, &mut rec)?,
        Command::Catalog(c) => commands::catalog(c, &mut rec)?,
        Command::Wideband(a) => commands::wideband(a, &mut rec)?,
    }
    let manifest = rec.finish();
    let path = cli.manifest.clone().or_else(|| {
        commands::primary_output(&cli.command).map(|out| manifest::sidecar_path(&out, ".manifest.json"))
    });
    match path {
        Some(path) => conepack_core::io::write_json(&manifest, path)?,
        None => eprint!("{}", conepack_core::io::to_json_string(&manifest)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
