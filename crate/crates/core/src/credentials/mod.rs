//! Verifiable credentials and presentations, status-list revocation and
//! transfer-credential chains.
//!
//! Verification never fails with an error: every check becomes a verdict in
//! a report, so callers can see exactly which property did not hold.

mod presentation;
mod transfer;
mod vc;

use thiserror::Error;

use crate::identity::{Did, IdentityError, ProductRef};
use crate::vdr::{Ledger, LedgerError, LedgerTransaction, StatusList};

pub use presentation::{create_presentation, verify_presentation, Nonce, PresentationReport, VerifiablePresentation};
pub use transfer::{
    issue_transfer_credential, verify_transfer_chain, ChainReport, LinkReport, SaleInfo, TransferCredential,
    TRANSFER_TYPE,
};
pub use vc::{
    issue_credential, verify_credential, Proof, StatusRef, Subject, Validity, VerifiableCredential, VerificationReport,
};

#[derive(Debug, Error)]
pub enum CredentialError {
    #[error("issuer {0} is not registered")]
    IssuerNotResolvable(Did),
    #[error("issuer {0} is deactivated")]
    IssuerDeactivated(Did),
    #[error("key {key_id} is not published in the document of {did}")]
    KeyNotRegistered { did: Did, key_id: String },
    #[error("expiry must be strictly after issuance")]
    InvalidValidity,
    #[error("status list {0} not found")]
    StatusListNotFound(String),
    #[error("status list {list} does not belong to {issuer}")]
    ForeignStatusList { list: String, issuer: Did },
    #[error("a presentation needs at least one credential")]
    EmptyPresentation,
    #[error("transfer chain mismatch: {0}")]
    ChainMismatch(String),
    #[error("product mismatch: chain is for {expected}, link names {found}")]
    ProductMismatch { expected: ProductRef, found: ProductRef },
    #[error("no manufacturer of record for {0}: the product has no status list")]
    NoManufacturerOfRecord(ProductRef),
    #[error("not a transfer credential: {0}")]
    NotATransferCredential(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

/// Sets the status bit of `index` on behalf of `signer`, who must own the
/// list or hold that slot. Revoking twice adds nothing to the ledger.
pub fn revoke(
    signer: &crate::identity::Identity,
    list_id: &str,
    index: u32,
    registry: &mut Ledger,
    now: crate::identity::Timestamp,
) -> Result<(StatusList, LedgerTransaction), CredentialError> {
    let list = registry.status_list(list_id).ok_or_else(|| CredentialError::StatusListNotFound(list_id.to_owned()))?;
    if list.owner != signer.did && list.holder(index) != Some(&signer.did) {
        return Err(CredentialError::ForeignStatusList { list: list_id.to_owned(), issuer: signer.did.clone() });
    }
    let tx = registry.revoke(list_id, index, signer, now)?;
    let list = registry.status_list(list_id).expect("checked above").clone();
    Ok((list, tx))
}

#[cfg(test)]
pub(crate) mod testkit;
