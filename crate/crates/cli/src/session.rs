//! A session is a seeded [`Network`] plus the journal of mutating commands
//! that built it. The ledger file is the registry's own log; the journal,
//! kept next to it as `<ledger>.script`, lets the wallets and agents be
//! rebuilt, and loading checks that replaying it reproduces the ledger file
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use dppkit_core::lifecycle::Network;
use dppkit_core::vdr::FeeSchedule;

use crate::args::{AgentCmd, Command, Line, ProductCmd};
use crate::error::CliError;
use crate::exec;

pub struct Session {
    pub net: Network,
    seed: u64,
    journal: Vec<String>,
}

impl Session {
    pub fn new(seed: u64) -> Result<Self, CliError> {
        Ok(Self { net: Network::new(seed, FeeSchedule::default())?, seed, journal: Vec::new() })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mutating command lines applied so far.
    pub fn journal(&self) -> &[String] {
        &self.journal
    }

    pub(crate) fn record(&mut self, line: String) {
        self.journal.push(line);
    }

    pub fn journal_text(&self) -> String {
        let mut out = format!("seed {}\n", self.seed);
        for l in &self.journal {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    /// Rebuilds a session from journal text.
    pub fn rebuild(text: &str) -> Result<Self, CliError> {
        let (seed, lines) = split_script(text)?;
        let mut session = Session::new(seed)?;
        for (line_no, line) in lines {
            let cmd = parse_line(line).map_err(|message| CliError::Script { line: line_no, message })?;
            if mutation_line(&cmd).is_none() {
                return Err(CliError::Script { line: line_no, message: "journal holds a non-mutating command".into() });
            }
            exec::mutate(&mut session, &cmd).map_err(|e| CliError::Script { line: line_no, message: e.to_string() })?;
        }
        Ok(session)
    }

    /// Loads the session stored at `ledger`, refusing a ledger file that
    /// the journal does not reproduce.
    pub fn load(ledger: &Path) -> Result<Self, CliError> {
        if !ledger.exists() {
            return Err(CliError::Invalid(format!(
                "no ledger at {}; create one with `dppkit ledger init`",
                ledger.display()
            )));
        }
        let journal = journal_path(ledger);
        let text = fs::read_to_string(&journal).map_err(CliError::io(&journal))?;
        let session = Session::rebuild(&text)?;
        let on_disk = fs::read(ledger).map_err(CliError::io(ledger))?;
        if session.net.ledger.to_bytes()? != on_disk {
            return Err(CliError::Diverged(ledger.to_owned()));
        }
        Ok(session)
    }

    pub fn save(&self, ledger: &Path) -> Result<(), CliError> {
        self.net.ledger.save(ledger)?;
        let journal = journal_path(ledger);
        fs::write(&journal, self.journal_text()).map_err(CliError::io(&journal))
    }
}

pub fn journal_path(ledger: &Path) -> PathBuf {
    let mut name = ledger.as_os_str().to_owned();
    name.push(".script");
    PathBuf::from(name)
}

/// A script's seed and its numbered command lines.
pub type ScriptLines<'a> = (u64, Vec<(usize, &'a str)>);

/// Splits a script into its seed and the numbered command lines. Blank
/// lines and `#` comments are skipped; the first line must be `seed N`.
pub fn split_script(text: &str) -> Result<ScriptLines<'_>, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_no, first) = lines.next().ok_or(CliError::Script { line: 1, message: "empty script".into() })?;
    let seed = first
        .strip_prefix("seed ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::Script { line: first_no, message: "scripts start with `seed N`".into() })?;
    Ok((seed, lines.collect()))
}

/// Parses one script line with the command-line grammar.
pub fn parse_line(line: &str) -> Result<Command, String> {
    let words = shlex::split(line).ok_or_else(|| format!("unbalanced quotes in {line:?}"))?;
    Line::try_parse_from(words).map(|l| l.command).map_err(|e| e.render().to_string().trim_end().to_owned())
}

/// The journal line for a command that changes the session, `None` for
/// read-only commands.
pub fn mutation_line(cmd: &Command) -> Option<String> {
    let mut w: Vec<String> = Vec::new();
    let flag = |w: &mut Vec<String>, name: &str, value: String| {
        w.push(format!("--{name}"));
        w.push(value);
    };
    match cmd {
        Command::Agent(AgentCmd::Create { name, role, funds, listed }) => {
            w.extend(["agent".into(), "create".into(), name.clone()]);
            flag(&mut w, "role", role.to_string());
            flag(&mut w, "funds", funds.to_string());
            if *listed {
                w.push("--listed".into());
            }
        }
        Command::Agent(AgentCmd::Fund { name, amount }) => {
            w.extend(["agent".into(), "fund".into(), name.clone(), amount.to_string()]);
        }
        Command::Product(ProductCmd::Mint(m)) => {
            w.extend(["product".into(), "mint".into(), m.product.to_string()]);
            flag(&mut w, "proposal", m.proposal.to_string());
            flag(&mut w, "by", m.by.clone());
            if let Some(g) = m.granularity {
                flag(&mut w, "granularity", g.to_string());
            }
            for c in &m.claims {
                flag(&mut w, "claim", c.to_string());
            }
            for c in &m.components {
                flag(&mut w, "component", c.to_string());
            }
            if m.hybrid {
                w.push("--hybrid".into());
            }
        }
        Command::Transfer(t) => {
            w.extend(["transfer".into(), t.product.to_string()]);
            flag(&mut w, "from", t.from.clone());
            flag(&mut w, "to", t.to.clone());
            if let Some(p) = t.price {
                flag(&mut w, "price", p.to_string());
            }
            if let Some(d) = &t.reuse {
                flag(&mut w, "reuse", d.to_string());
            }
        }
        Command::ClaimControl(o) => {
            w.extend(["claim-control".into(), o.product.to_string()]);
            flag(&mut w, "owner", o.owner.clone());
        }
        Command::Repair(r) => {
            w.extend(["repair".into(), r.product.to_string()]);
            flag(&mut w, "owner", r.owner.clone());
            flag(&mut w, "workshop", r.workshop.clone());
            flag(&mut w, "claim", r.claim.to_string());
        }
        _ => return None,
    }
    Some(shlex::try_join(w.iter().map(String::as_str)).expect("arguments hold no NUL bytes"))
}
