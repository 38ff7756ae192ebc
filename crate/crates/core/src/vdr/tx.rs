use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::identity::{
    canonicalize, to_canonical_value, Did, DidDocument, Digest256, IdentityError, ProductId, ProductRef, PublicKey,
    Signature, Timestamp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TxKind {
    /// Faucet credit; the only way tokens enter an account.
    Deposit,
    CreateDid,
    UpdateDid,
    DeactivateDid,
    AnchorHash,
    StatusListCreate,
    StatusListUpdate,
}

/// Registers the anchor's signer as holder of a status-list slot, which
/// lets that holder revoke the slot later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusAssignment {
    pub list_id: String,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorPayload {
    pub target: ProductId,
    pub digest: Digest256,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<StatusAssignment>,
    /// Set when a delegate anchored: the delegation is consumed and the
    /// document moves to this version.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document_version: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum TxPayload {
    Deposit {
        account: Did,
        amount: Decimal,
    },
    CreateDid {
        document: DidDocument,
    },
    UpdateDid {
        document: DidDocument,
    },
    DeactivateDid {
        did: Did,
        version_id: u64,
    },
    AnchorHash(AnchorPayload),
    StatusListCreate {
        list_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        product: Option<ProductRef>,
    },
    StatusListUpdate {
        list_id: String,
        index: u32,
        bits_digest: Digest256,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TxAuth {
    pub signer: Did,
    pub public_key: PublicKey,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LedgerTransaction {
    pub seq: u64,
    pub logical_time: Timestamp,
    #[serde(flatten)]
    pub payload: TxPayload,
    pub fee_tokens: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_payer: Option<Did>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth: Option<TxAuth>,
}

impl LedgerTransaction {
    pub fn kind(&self) -> TxKind {
        match &self.payload {
            TxPayload::Deposit { .. } => TxKind::Deposit,
            TxPayload::CreateDid { .. } => TxKind::CreateDid,
            TxPayload::UpdateDid { .. } => TxKind::UpdateDid,
            TxPayload::DeactivateDid { .. } => TxKind::DeactivateDid,
            TxPayload::AnchorHash(_) => TxKind::AnchorHash,
            TxPayload::StatusListCreate { .. } => TxKind::StatusListCreate,
            TxPayload::StatusListUpdate { .. } => TxKind::StatusListUpdate,
        }
    }

    /// The DID or product this transaction is about, if any.
    pub fn target(&self) -> Option<ProductId> {
        match &self.payload {
            TxPayload::CreateDid { document } | TxPayload::UpdateDid { document } => {
                Some(ProductId::Did(document.id.clone()))
            }
            TxPayload::DeactivateDid { did, .. } => Some(ProductId::Did(did.clone())),
            TxPayload::AnchorHash(anchor) => Some(anchor.target.clone()),
            _ => None,
        }
    }

    pub fn signer(&self) -> Option<&Did> {
        self.auth.as_ref().map(|a| &a.signer)
    }

    /// Bytes covered by the signature: the canonical transaction with the
    /// signature value itself removed.
    pub fn signing_bytes(&self) -> Result<Vec<u8>, IdentityError> {
        let mut value = to_canonical_value(self)?;
        if let Some(auth) = value.get_mut("auth").and_then(|a| a.as_object_mut()) {
            auth.remove("signature");
        }
        canonicalize(&value)
    }
}
