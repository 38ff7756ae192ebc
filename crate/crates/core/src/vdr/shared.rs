use std::sync::{PoisonError, RwLock};

use super::{Ledger, LedgerError};

/// A ledger behind one committer. Writers are serialized through
/// [`SharedLedger::commit`]; readers see only committed state.
#[derive(Debug)]
pub struct SharedLedger {
    inner: RwLock<Ledger>,
}

impl SharedLedger {
    pub fn new(ledger: Ledger) -> Self {
        Self { inner: RwLock::new(ledger) }
    }

    /// Runs `f` atomically under the write lock.
    pub fn commit<T>(&self, f: impl FnOnce(&mut Ledger) -> Result<T, LedgerError>) -> Result<T, LedgerError> {
        let mut guard = self.inner.write().unwrap_or_else(PoisonError::into_inner);
        guard.atomic(f)
    }

    pub fn read<T>(&self, f: impl FnOnce(&Ledger) -> T) -> T {
        let guard = self.inner.read().unwrap_or_else(PoisonError::into_inner);
        f(&guard)
    }

    /// Owned copy of the committed state.
    pub fn snapshot(&self) -> Ledger {
        self.read(Ledger::clone)
    }

    pub fn into_inner(self) -> Ledger {
        self.inner.into_inner().unwrap_or_else(PoisonError::into_inner)
    }
}
