use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CredentialError;
use crate::identity::{
    canonicalize, digest_of, sha256, to_canonical_value, verify, Did, Digest256, Identity, IdentityError,
    ProductRef, PublicKey, Signature, Timestamp,
};
use crate::vdr::Ledger;

/// Who a credential is about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Subject {
    Did(Did),
    Product(ProductRef),
    /// No subject: valid for whoever presents it.
    Bearer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusRef {
    pub list_id: String,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Proof {
    /// DID URL of the signing key, `did:...#key-id`.
    pub verification_method: String,
    pub created: Timestamp,
    pub signature: Signature,
}

impl Proof {
    pub(crate) fn key_reference(&self) -> Option<(Did, &str)> {
        let (did, fragment) = self.verification_method.split_once('#')?;
        Some((did.parse().ok()?, fragment))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    pub issued_at: Timestamp,
    pub expires_at: Option<Timestamp>,
}

impl Validity {
    pub fn from(issued_at: Timestamp) -> Self {
        Self { issued_at, expires_at: None }
    }

    pub fn until(issued_at: Timestamp, expires_at: Timestamp) -> Self {
        Self { issued_at, expires_at: Some(expires_at) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifiableCredential {
    pub id: String,
    pub issuer: Did,
    pub subject: Subject,
    pub claims: BTreeMap<String, Value>,
    pub issued_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<StatusRef>,
    pub proof: Proof,
}

impl VerifiableCredential {
    /// Canonical bytes covered by the proof: the credential minus `proof`.
    pub fn signing_bytes(&self) -> Result<Vec<u8>, IdentityError> {
        let mut value = to_canonical_value(self)?;
        value.as_object_mut().expect("credential is an object").remove("proof");
        canonicalize(&value)
    }

    /// Digest of the full canonical encoding, i.e. of the credential file.
    /// This is what gets anchored.
    pub fn digest(&self) -> Digest256 {
        digest_of(self).expect("credentials hold no floats")
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        crate::identity::to_canonical(self).expect("credentials hold no floats")
    }

    pub fn claim_str(&self, key: &str) -> Option<&str> {
        self.claims.get(key).and_then(Value::as_str)
    }

    /// Product the credential is about: the subject, or a `product` claim.
    pub fn product(&self) -> Option<ProductRef> {
        match &self.subject {
            Subject::Product(p) => Some(p.clone()),
            _ => self.claims.get("product").and_then(|v| serde_json::from_value(v.clone()).ok()),
        }
    }

    pub fn category(&self) -> Option<&str> {
        self.claim_str("category")
    }
}

/// Verdicts for one credential. Valid only when every verdict holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub credential_id: String,
    pub signature_valid: bool,
    pub issuer_resolvable: bool,
    pub not_expired: bool,
    pub not_revoked: bool,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.signature_valid && self.issuer_resolvable && self.not_expired && self.not_revoked
    }
}

pub fn issue_credential(
    issuer: &Identity,
    subject: Subject,
    claims: BTreeMap<String, Value>,
    validity: Validity,
    status: Option<StatusRef>,
    registry: &Ledger,
) -> Result<VerifiableCredential, CredentialError> {
    let doc = registry
        .resolve_did(&issuer.did)
        .map_err(|_| CredentialError::IssuerNotResolvable(issuer.did.clone()))?;
    if doc.deactivated {
        return Err(CredentialError::IssuerDeactivated(issuer.did.clone()));
    }
    let key_id = issuer.keys.key_id();
    if doc.key(key_id).map(|vm| vm.public_key) != Some(issuer.keys.public_key()) {
        return Err(CredentialError::KeyNotRegistered { did: issuer.did.clone(), key_id: key_id.to_owned() });
    }
    if validity.expires_at.is_some_and(|e| e <= validity.issued_at) {
        return Err(CredentialError::InvalidValidity);
    }

    let mut vc = VerifiableCredential {
        id: String::new(),
        issuer: issuer.did.clone(),
        subject,
        claims,
        issued_at: validity.issued_at,
        expires_at: validity.expires_at,
        status,
        proof: Proof {
            verification_method: issuer.key_ref(),
            created: validity.issued_at,
            signature: Signature::from_bytes([0u8; 64]),
        },
    };
    if let Some(status) = &vc.status {
        let list = registry
            .status_list(&status.list_id)
            .ok_or_else(|| CredentialError::StatusListNotFound(status.list_id.clone()))?;
        // product-bound lists take entries from every link of that product's chain
        let product_bound = list.product.is_some() && list.product == vc.product();
        if list.owner != issuer.did && !product_bound {
            return Err(CredentialError::ForeignStatusList { list: status.list_id.clone(), issuer: issuer.did.clone() });
        }
    }
    vc.id = credential_id(&vc)?;
    vc.proof.signature = issuer.keys.sign(&vc.signing_bytes()?);
    Ok(vc)
}

/// Content-derived id: hash of everything except `id` and `proof`.
fn credential_id(vc: &VerifiableCredential) -> Result<String, IdentityError> {
    let mut value = to_canonical_value(vc)?;
    let obj = value.as_object_mut().expect("credential is an object");
    obj.remove("id");
    obj.remove("proof");
    let digest = sha256(&canonicalize(&value)?);
    Ok(format!("urn:dppkit:vc:{}", &digest.to_hex()[..32]))
}

/// Public key behind a proof, looked up in the signer's current document.
pub(crate) fn resolve_proof_key(proof: &Proof, expected_signer: &Did, registry: &Ledger) -> Option<PublicKey> {
    let (did, fragment) = proof.key_reference()?;
    if &did != expected_signer {
        return None;
    }
    registry.resolve_did(&did).ok()?.key(fragment).map(|vm| vm.public_key)
}

pub fn verify_credential(vc: &VerifiableCredential, registry: &Ledger, now: Timestamp) -> VerificationReport {
    let issuer_resolvable = registry.is_active(&vc.issuer);
    let signature_valid = match (resolve_proof_key(&vc.proof, &vc.issuer, registry), vc.signing_bytes()) {
        (Some(key), Ok(bytes)) => verify(&key, &bytes, &vc.proof.signature),
        _ => false,
    };
    let not_expired = match vc.expires_at {
        Some(expiry) => expiry > vc.issued_at && now < expiry,
        None => true,
    };
    let not_revoked = match &vc.status {
        None => true,
        Some(status) => registry.status_list(&status.list_id).is_some_and(|l| !l.is_revoked_at(status.index, now)),
    };
    VerificationReport { credential_id: vc.id.clone(), signature_valid, issuer_resolvable, not_expired, not_revoked }
}
