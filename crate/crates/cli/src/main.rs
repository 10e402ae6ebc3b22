// `!(x > y)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;
mod reference;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::Cli;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_numerical() => {
            eprintln!("numerical failure: {e}");
            let path = cli.out.join("diagnostics.json");
            let report = json!({
                "arguments": std::env::args().collect::<Vec<_>>(),
                "error": e.to_string(),
                "detail": format!("{e:?}"),
            });
            match std::fs::create_dir_all(&cli.out)
                .and_then(|_| std::fs::write(&path, format!("{report:#}\n")))
            {
                Ok(()) => eprintln!("diagnostics written to {}", path.display()),
                Err(io) => eprintln!("could not write {}: {io}", path.display()),
            }
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
