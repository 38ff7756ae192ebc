//! Newline-delimited ledger file: a genesis line carrying the fee schedule,
//! then one canonical transaction per line.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeeSchedule, Ledger, LedgerError, LedgerTransaction};
use crate::identity::to_canonical;

const FORMAT: &str = "dppkit-ledger/1";

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Genesis {
    format: String,
    fees: FeeSchedule,
}

#[derive(Serialize, Deserialize)]
struct GenesisLine {
    genesis: Genesis,
}

impl Ledger {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), LedgerError> {
        let genesis = GenesisLine { genesis: Genesis { format: FORMAT.into(), fees: self.fees.clone() } };
        out.write_all(&to_canonical(&genesis)?)?;
        out.write_all(b"\n")?;
        for tx in &self.log {
            out.write_all(&to_canonical(tx)?)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, LedgerError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    /// Writes the whole log and syncs it to disk.
    pub fn save(&self, path: &Path) -> Result<(), LedgerError> {
        let mut file = File::create(path)?;
        self.write_to(&mut file)?;
        file.sync_all()?;
        Ok(())
    }

    /// Rebuilds a ledger from its file, re-validating every transaction.
    /// Each line must be byte-identical to the canonical encoding of what it
    /// parses to.
    pub fn replay<R: BufRead>(input: R) -> Result<Ledger, LedgerError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or(LedgerError::Replay { line: 1, reason: "empty ledger file".into() })??;
        let genesis: GenesisLine =
            serde_json::from_str(&first).map_err(|e| LedgerError::Replay { line: 1, reason: e.to_string() })?;
        if genesis.genesis.format != FORMAT {
            return Err(LedgerError::Replay { line: 1, reason: format!("unknown format {}", genesis.genesis.format) });
        }
        if to_canonical(&genesis)? != first.as_bytes() {
            return Err(LedgerError::Replay { line: 1, reason: "genesis line is not canonical".into() });
        }
        let mut ledger = Ledger::new(genesis.genesis.fees)?;
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let tx: LedgerTransaction = serde_json::from_str(&line)
                .map_err(|e| LedgerError::Replay { line: line_no, reason: e.to_string() })?;
            if to_canonical(&tx)? != line.as_bytes() {
                return Err(LedgerError::Replay { line: line_no, reason: "line is not canonical".into() });
            }
            ledger.apply(tx).map_err(|e| LedgerError::Replay { line: line_no, reason: e.to_string() })?;
        }
        Ok(ledger)
    }

    pub fn open(path: &Path) -> Result<Ledger, LedgerError> {
        Ledger::replay(BufReader::new(File::open(path)?))
    }
}
