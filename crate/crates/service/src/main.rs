use anyhow::Context;
use clap::Parser;
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use crispr_agent_service::api::serve;
use crispr_agent_service::cli::{run_cli, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(Outcome::Done { stdout, code }) => {
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout(), "{stdout}");
            ExitCode::from(code)
        }
        Ok(Outcome::Serve { state, bind }) => match run_server(*state, &bind) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run_server(state: crispr_agent_service::api::AppState, bind: &str) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    eprintln!("listening on {bind}");
    rt.block_on(serve(Arc::new(state), bind))
        .with_context(|| format!("serving on {bind}"))
}
