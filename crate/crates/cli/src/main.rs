use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use dppkit_cli::args::Cli;

/// Exit status when `--strict` is set and a report found a problem.
const REPORT_FAILURE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dppkit_cli::run(&cli) {
        Ok(reports) => {
            let mut out = std::io::stdout().lock();
            for r in &reports {
                let _ = out.write_all(r.render(cli.format).as_bytes());
            }
            if cli.strict && reports.iter().any(|r| !r.passed()) {
                ExitCode::from(REPORT_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("dppkit: {e}");
            ExitCode::FAILURE
        }
    }
}
