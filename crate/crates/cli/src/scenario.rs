//! Line-oriented scenario scripts: `seed N`, then one command per line in
//! command-line syntax. A line prefixed with `!` must be rejected.

use std::fs;
use std::path::Path;

use dppkit_core::identity::Digest256;
use serde_json::json;

use crate::args::Command;
use crate::error::CliError;
use crate::exec;
use crate::render::Report;
use crate::session::{parse_line, split_script, Session};

/// Built-in scenarios: name, summary, script.
pub const BUILTINS: [(&str, &str, &str); 4] = [
    (
        "glasses",
        "cycling-glasses frame passport kept per model in its DID document",
        include_str!("../scenarios/glasses.dpps"),
    ),
    (
        "mouse",
        "mouse with a credential per component, resold and repaired",
        include_str!("../scenarios/mouse.dpps"),
    ),
    ("car", "car with a deep component tree and hybrid storage", include_str!("../scenarios/car.dpps")),
    (
        "fraud",
        "a legal retailer and a fraudulent one presenting ownership chains",
        include_str!("../scenarios/fraud.dpps"),
    ),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _, _)| *n == name).map(|(_, _, s)| *s)
}

/// The script for a built-in name, else the file at that path.
pub fn load(name_or_path: &str) -> Result<String, CliError> {
    match builtin(name_or_path) {
        Some(script) => Ok(script.to_owned()),
        None => {
            let path = Path::new(name_or_path);
            if !path.exists() {
                let names: Vec<&str> = BUILTINS.iter().map(|(n, _, _)| *n).collect();
                return Err(CliError::Invalid(format!(
                    "no scenario {name_or_path:?}: not a file and not one of {}",
                    names.join(", ")
                )));
            }
            fs::read_to_string(path).map_err(CliError::io(path))
        }
    }
}

pub struct ScenarioRun {
    pub session: Session,
    /// One report per command, in order.
    pub reports: Vec<Report>,
}

impl ScenarioRun {
    pub fn transcript_digest(&self) -> Digest256 {
        self.session.net.transcript().digest()
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().map(|r| r.failures.len()).sum()
    }

    pub fn summary(&self, name: &str) -> Report {
        let net = &self.session.net;
        Report::new(
            "scenario",
            json!({
                "scenario": name,
                "commands": self.reports.len(),
                "transactions": net.ledger.len(),
                "transcriptDigest": self.transcript_digest(),
                "ledgerDigest": net.ledger.state_digest(),
                "failures": self.failures(),
            }),
        )
        .line(format!(
            "scenario {name}: {} command(s), {} transaction(s), {} failure(s)",
            self.reports.len(),
            net.ledger.len(),
            self.failures()
        ))
        .line(format!("transcript {}", self.transcript_digest()))
        .line(format!("ledger {}", net.ledger.state_digest()))
    }
}

/// Runs a script on a fresh session. `depth` overrides every resolve's depth.
pub fn run_script(text: &str, depth: Option<usize>) -> Result<ScenarioRun, CliError> {
    let (seed, lines) = split_script(text)?;
    let mut session = Session::new(seed)?;
    let mut reports = Vec::new();
    for (line_no, raw) in lines {
        let (must_fail, line) = match raw.strip_prefix('!') {
            Some(rest) => (true, rest.trim_start()),
            None => (false, raw),
        };
        let script_err = |message: String| CliError::Script { line: line_no, message };
        let mut cmd = parse_line(line).map_err(script_err)?;
        if let (Command::Resolve(r), Some(d)) = (&mut cmd, depth) {
            r.depth = Some(d);
        }
        if matches!(cmd, Command::Ledger(_) | Command::Scenario(_) | Command::Export(_)) {
            return Err(script_err("ledger, scenario and export commands are not allowed in scripts".into()));
        }
        let outcome = exec::execute(&mut session, &cmd);
        let report = match (outcome, must_fail) {
            (Ok(r), false) => r,
            (Err(e), false) => return Err(script_err(e.to_string())),
            (Err(e), true) => {
                Report::new("rejected", json!({ "error": e.to_string() })).line(format!("rejected as expected: {e}"))
            }
            (Ok(r), true) => Report { failures: vec!["expected this command to be rejected".into()], ..r },
        };
        let mut lines = vec![format!("> {raw}")];
        lines.append(&mut report.lines.clone());
        reports.push(Report { lines, ..report });
    }
    Ok(ScenarioRun { session, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_and_runs_clean() {
        for (name, _, script) in BUILTINS {
            let run = run_script(script, None).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(run.failures(), 0, "{name}: {:?}", run.reports.iter().flat_map(|r| &r.failures).collect::<Vec<_>>());
        }
    }

    #[test]
    fn expected_rejections_must_happen() {
        let script = "seed 1\n! agent fund nobody 5\n! agent create a --role customer\n";
        let run = run_script(script, None).unwrap();
        assert_eq!(run.reports[0].kind, "rejected");
        assert_eq!(run.reports[1].failures.len(), 1);
    }

    #[test]
    fn errors_name_their_line() {
        let err = run_script("seed 1\n\nagent fund nobody 5\n", None).err().unwrap();
        assert!(matches!(err, CliError::Script { line: 3, .. }), "{err}");
        let err = run_script("seed 1\nledger init\n", None).err().unwrap();
        assert!(matches!(err, CliError::Script { line: 2, .. }));
    }
}
