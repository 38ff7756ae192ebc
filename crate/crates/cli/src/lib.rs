//! Command-line front end over `dppkit-core`: a persistent session of
//! agents, products and a fee-charging registry, protocol commands, reports
//! and scripted scenarios.

pub mod args;
pub mod error;
pub mod exec;
pub mod render;
pub mod scenario;
pub mod session;

use std::fs;
use std::io::BufReader;

use dppkit_core::vdr::Ledger;
use serde_json::json;

use crate::args::{Cli, Command, LedgerCmd, ScenarioCmd};
use crate::error::CliError;
use crate::render::Report;
use crate::session::{journal_path, mutation_line, Session};

/// Runs one invocation and returns its reports in output order.
pub fn run(cli: &Cli) -> Result<Vec<Report>, CliError> {
    let ledger = &cli.ledger;
    match &cli.command {
        Command::Ledger(LedgerCmd::Init { seed, force }) => {
            if ledger.exists() && !force {
                return Err(CliError::Invalid(format!("{} exists; pass --force to overwrite", ledger.display())));
            }
            Session::new(*seed)?.save(ledger)?;
            Ok(vec![Report::new("ledger.init", json!({ "ledger": ledger, "seed": seed }))
                .line(format!("initialized {} with seed {seed}", ledger.display()))])
        }
        Command::Ledger(LedgerCmd::Replay) => replay(cli),
        Command::Scenario(ScenarioCmd::List) => {
            let rows: Vec<Vec<String>> =
                scenario::BUILTINS.iter().map(|(n, d, _)| vec![n.to_string(), d.to_string()]).collect();
            let names: Vec<&str> = scenario::BUILTINS.iter().map(|(n, _, _)| *n).collect();
            Ok(vec![Report::new("scenario.list", names).lines(rows.iter().map(|r| format!("{:<8} {}", r[0], r[1])))])
        }
        Command::Scenario(ScenarioCmd::Run { scenario: name, depth, save }) => {
            let run = scenario::run_script(&scenario::load(name)?, *depth)?;
            if *save {
                if ledger.exists() {
                    return Err(CliError::Invalid(format!("{} exists; refusing to overwrite it", ledger.display())));
                }
                run.session.save(ledger)?;
            }
            let summary = run.summary(name);
            let mut reports = run.reports;
            reports.push(summary);
            Ok(reports)
        }
        Command::Cost(c) if c.reconcile.is_none() => Ok(vec![exec::cost(None, c)?]),
        cmd => {
            let mut session = Session::load(ledger)?;
            let report = exec::execute(&mut session, cmd)?;
            if mutation_line(cmd).is_some() {
                session.save(ledger)?;
            }
            Ok(vec![report])
        }
    }
}

/// Re-validates the ledger file on its own, rebuilds the session from the
/// journal, and compares the two.
fn replay(cli: &Cli) -> Result<Vec<Report>, CliError> {
    let file = fs::File::open(&cli.ledger).map_err(CliError::io(&cli.ledger))?;
    let from_file = Ledger::replay(BufReader::new(file))?;
    let journal = journal_path(&cli.ledger);
    let text = fs::read_to_string(&journal).map_err(CliError::io(&journal))?;
    let session = Session::rebuild(&text)?;
    let rebuilt = &session.net.ledger;
    let mut failures = Vec::new();
    if rebuilt.to_bytes()? != from_file.to_bytes()? {
        failures.push(format!("the journal does not reproduce {}", cli.ledger.display()));
    }
    let transcript = session.net.transcript().digest();
    Ok(vec![Report::new(
        "ledger.replay",
        json!({
            "transactions": from_file.len(),
            "ledgerDigest": from_file.state_digest(),
            "journalDigest": rebuilt.state_digest(),
            "transcriptDigest": transcript,
            "commands": session.journal().len(),
        }),
    )
    .line(format!("{} transaction(s) replayed from {}", from_file.len(), cli.ledger.display()))
    .line(format!("ledger  {}", from_file.state_digest()))
    .line(format!("journal {} ({} command(s))", rebuilt.state_digest(), session.journal().len()))
    .line(format!("transcript {transcript}"))
    .failures(failures)])
}
