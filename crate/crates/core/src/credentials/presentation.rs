use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::vc::{resolve_proof_key, verify_credential, Proof, Subject, VerifiableCredential, VerificationReport};
use super::CredentialError;
use crate::identity::{
    canonicalize, to_canonical_value, verify, Did, Identity, IdentityError, PublicKey, Signature, Timestamp,
};
use crate::vdr::Ledger;

/// Verifier-chosen challenge, serialized as hex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Nonce(pub Vec<u8>);

impl Serialize for Nonce {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Nonce {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map(Nonce).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifiablePresentation {
    pub holder: Did,
    pub credentials: Vec<VerifiableCredential>,
    pub audience: Did,
    pub nonce: Nonce,
    pub proof: Proof,
}

impl VerifiablePresentation {
    pub fn signing_bytes(&self) -> Result<Vec<u8>, IdentityError> {
        let mut value = to_canonical_value(self)?;
        value.as_object_mut().expect("presentation is an object").remove("proof");
        canonicalize(&value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PresentationReport {
    pub holder_signature_valid: bool,
    pub audience_match: bool,
    pub nonce_match: bool,
    /// Every DID-subject credential names the holder, or a product whose
    /// document the holder controls. Product-reference and bearer
    /// credentials are not bound to anyone.
    pub subject_binding: bool,
    pub credentials: Vec<VerificationReport>,
}

impl PresentationReport {
    pub fn is_valid(&self) -> bool {
        self.holder_signature_valid
            && self.audience_match
            && self.nonce_match
            && self.subject_binding
            && self.credentials.iter().all(VerificationReport::is_valid)
    }
}

/// Signs `credentials` for `audience`. The holder signs with whatever key
/// it has; whether that key counts is decided by the verifier.
pub fn create_presentation(
    holder: &Identity,
    credentials: Vec<VerifiableCredential>,
    audience: &Did,
    nonce: Nonce,
    now: Timestamp,
) -> Result<VerifiablePresentation, CredentialError> {
    if credentials.is_empty() {
        return Err(CredentialError::EmptyPresentation);
    }
    let mut vp = VerifiablePresentation {
        holder: holder.did.clone(),
        credentials,
        audience: audience.clone(),
        nonce,
        proof: Proof {
            verification_method: holder.key_ref(),
            created: now,
            signature: Signature::from_bytes([0u8; 64]),
        },
    };
    vp.proof.signature = holder.keys.sign(&vp.signing_bytes()?);
    Ok(vp)
}

/// The holder's key: from its own active document, or, for a holder that
/// never registered, a key it controls in the document of a product it
/// presents credentials about.
fn holder_key(vp: &VerifiablePresentation, registry: &Ledger) -> Option<PublicKey> {
    if registry.resolve_did(&vp.holder).is_ok() {
        return registry.is_active(&vp.holder).then(|| resolve_proof_key(&vp.proof, &vp.holder, registry)).flatten();
    }
    let (did, fragment) = vp.proof.key_reference()?;
    if did != vp.holder {
        return None;
    }
    vp.credentials.iter().find_map(|vc| {
        let Subject::Did(product) = &vc.subject else { return None };
        let doc = registry.resolve_did(product).ok().filter(|d| d.controller == vp.holder && !d.deactivated)?;
        doc.verification_methods
            .iter()
            .find(|vm| vm.id == fragment && vm.controller == vp.holder)
            .map(|vm| vm.public_key)
    })
}

pub fn verify_presentation(
    vp: &VerifiablePresentation,
    registry: &Ledger,
    expected_audience: &Did,
    expected_nonce: &Nonce,
    now: Timestamp,
) -> PresentationReport {
    let holder_signature_valid = match (holder_key(vp, registry), vp.signing_bytes()) {
        (Some(key), Ok(bytes)) => verify(&key, &bytes, &vp.proof.signature),
        _ => false,
    };
    let subject_binding = vp.credentials.iter().all(|vc| match &vc.subject {
        Subject::Did(did) if did == &vp.holder => true,
        // a product's own DID binds to whoever controls its document
        Subject::Did(did) => registry
            .resolve_did(did)
            .is_ok_and(|doc| doc.also_known_as.is_some() && doc.controller == vp.holder),
        Subject::Product(_) | Subject::Bearer => true,
    });
    PresentationReport {
        holder_signature_valid,
        audience_match: &vp.audience == expected_audience,
        nonce_match: &vp.nonce == expected_nonce,
        subject_binding,
        credentials: vp.credentials.iter().map(|vc| verify_credential(vc, registry, now)).collect(),
    }
}
