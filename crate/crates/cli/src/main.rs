mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use qwd_core::spin_model::DEFAULT_T_FLOOR;
use qwd_core::Error;

use args::{Cli, Command};
use commands::Env;

const EXIT_PARTIAL: u8 = 2;
const EXIT_USAGE: u8 = 1;

fn t_floor() -> Result<f64, String> {
    match std::env::var("QWD_T_FLOOR") {
        Err(_) => Ok(DEFAULT_T_FLOOR),
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| format!("QWD_T_FLOOR must be a positive number, got '{s}'")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

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
    let env = match t_floor() {
        Ok(t_floor) => Env { t_floor },
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let result = match &cli.command {
        Command::Point(a) => commands::point(a, &env),
        Command::Profile(a) => commands::profile(a, &env),
        Command::Boundary(a) => commands::boundary(a, &env),
        Command::Triple(a) => commands::triple(a, &env),
        Command::Jumps(a) => commands::jumps(a, &env),
        Command::Diagram(a) => commands::diagram(a, &env),
    };
    let rendered = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            let no_result = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::NoRoot { .. } | Error::AmbiguousBracket { .. })
            );
            return ExitCode::from(if no_result { EXIT_PARTIAL } else { EXIT_USAGE });
        }
    };
    if let Err(e) = commands::write(&rendered) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    if rendered.partial {
        ExitCode::from(EXIT_PARTIAL)
    } else {
        ExitCode::SUCCESS
    }
}
