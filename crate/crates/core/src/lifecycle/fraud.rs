use serde::{Deserialize, Serialize};

use super::CommercialRegistry;
use crate::credentials::{verify_transfer_chain, ChainReport, Nonce, TransferCredential, VerifiablePresentation};
use crate::identity::{verify, Did, Timestamp};
use crate::vdr::Ledger;

/// What the customer asked the seller to sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub audience: Did,
    pub nonce: Nonce,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FraudReport {
    pub presenter: Did,
    pub signer_in_commercial_registry: bool,
    /// The presentation is signed, for this challenge, by a key the
    /// commercial registry lists for the presenter.
    pub signer_key_verifies: bool,
    /// The head of the presented chain names the presenter as buyer.
    pub chain_subject_continuity: bool,
    pub chain_verdict: bool,
    pub chain: Option<ChainReport>,
}

impl FraudReport {
    pub fn fraudulent(&self) -> bool {
        !(self.signer_in_commercial_registry
            && self.signer_key_verifies
            && self.chain_subject_continuity
            && self.chain_verdict)
    }

    /// Names of the failed verdicts.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = [
            (self.signer_in_commercial_registry, "signer in commercial registry"),
            (self.signer_key_verifies, "signer key verifies"),
            (self.chain_subject_continuity, "chain subject continuity"),
            (self.chain_verdict, "chain verdict"),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| name.to_owned())
        .collect();
        if let Some(chain) = &self.chain {
            out.extend(chain.failures().into_iter().map(|f| format!("chain: {f}")));
        }
        out
    }
}

/// Checks a seller's presentation: the seller must be a listed company
/// signing with its listed key, and must present a valid ownership chain
/// whose head names it. The longest presented chain is taken as the head.
pub fn detect_fraud(
    vp: &VerifiablePresentation,
    commercial: &CommercialRegistry,
    registry: &Ledger,
    challenge: &Challenge,
    now: Timestamp,
) -> FraudReport {
    let signed = vp.signing_bytes().ok();
    let signer_key_verifies = vp.audience == challenge.audience
        && vp.nonce == challenge.nonce
        && signed.is_some_and(|bytes| commercial.keys(&vp.holder).iter().any(|k| verify(k, &bytes, &vp.proof.signature)));

    let head = vp
        .credentials
        .iter()
        .filter_map(|vc| TransferCredential::from_credential(vc.clone()).ok())
        .max_by_key(TransferCredential::len);
    let chain = head.as_ref().map(|h| verify_transfer_chain(h, registry, &commercial.trusted_manufacturers(), now));
    FraudReport {
        presenter: vp.holder.clone(),
        signer_in_commercial_registry: commercial.contains(&vp.holder),
        signer_key_verifies,
        chain_subject_continuity: head.as_ref().is_some_and(|h| h.buyer() == &vp.holder),
        chain_verdict: chain.as_ref().is_some_and(ChainReport::is_valid),
        chain,
    }
}
