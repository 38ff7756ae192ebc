use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::did::Did;
use super::gtin::ProductRef;
use super::keys::{Identity, PublicKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationMethod {
    /// Fragment, e.g. `key-1`.
    pub id: String,
    /// The DID this key speaks for.
    pub controller: Did,
    pub public_key: PublicKey,
}

/// What a delegate may do on a document it does not control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Capability {
    /// Anchor a credential digest against the document. Never covers
    /// controller, key, delegation or service changes.
    AnchorEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Delegation {
    pub delegate: Did,
    pub capability: Capability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Service {
    pub name: String,
    pub endpoint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DidDocument {
    pub id: Did,
    pub controller: Did,
    #[serde(default)]
    pub verification_methods: Vec<VerificationMethod>,
    #[serde(default)]
    pub delegations: Vec<Delegation>,
    #[serde(default)]
    pub services: Vec<Service>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub also_known_as: Option<ProductRef>,
    /// Free-form document content, e.g. a model-level passport.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, Value>,
    pub version_id: u64,
    #[serde(default)]
    pub deactivated: bool,
}

impl DidDocument {
    /// Version-1 document for `id`, controlled by `controller`, with no keys.
    pub fn new(id: Did, controller: Did) -> Self {
        Self {
            id,
            controller,
            verification_methods: Vec::new(),
            delegations: Vec::new(),
            services: Vec::new(),
            also_known_as: None,
            properties: BTreeMap::new(),
            version_id: 1,
            deactivated: false,
        }
    }

    /// Self-controlled document publishing the identity's key.
    pub fn for_identity(identity: &Identity) -> Self {
        let mut doc = Self::new(identity.did.clone(), identity.did.clone());
        doc.add_key(identity.keys.key_id(), identity.did.clone(), identity.keys.public_key());
        doc
    }

    pub fn add_key(&mut self, key_id: &str, controller: Did, public_key: PublicKey) {
        self.verification_methods.push(VerificationMethod { id: key_id.to_owned(), controller, public_key });
    }

    pub fn key(&self, key_id: &str) -> Option<&VerificationMethod> {
        self.verification_methods.iter().find(|vm| vm.id == key_id)
    }

    pub fn has_key(&self, public_key: &PublicKey) -> bool {
        self.verification_methods.iter().any(|vm| &vm.public_key == public_key)
    }

    pub fn delegation_for(&self, delegate: &Did) -> Option<&Delegation> {
        self.delegations.iter().find(|d| &d.delegate == delegate)
    }

    /// Copy with `version_id` bumped, ready to be edited and submitted.
    pub fn next_version(&self) -> Self {
        let mut doc = self.clone();
        doc.version_id += 1;
        doc
    }
}
