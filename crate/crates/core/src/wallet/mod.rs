//! Per-agent credential store with role-based selective disclosure.

mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::credentials::{
    create_presentation, verify_credential, CredentialError, Nonce, Subject, VerifiableCredential,
    VerifiablePresentation, VerificationReport,
};
use crate::dpp::{AccessPolicy, DppError, Role};
use crate::identity::{Did, Identity, ProductId, Timestamp};
use crate::vdr::Ledger;

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("credential {id} does not verify: {report:?}")]
    InvalidCredential { id: String, report: VerificationReport },
    #[error("credential {id} is about {subject}, which this wallet neither is nor controls")]
    ForeignSubject { id: String, subject: Did },
    #[error("nothing to disclose about {product} to role {role}")]
    NothingToDisclose { product: ProductId, role: Role },
    #[error("wallet directory belongs to {found}, not {expected}")]
    OwnerMismatch { expected: Did, found: Did },
    #[error("corrupt wallet directory: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Policy(#[from] DppError),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Credentials moved by [`Wallet::transfer_credentials`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransferOutcome {
    pub moved: Vec<String>,
}

impl TransferOutcome {
    pub fn is_noop(&self) -> bool {
        self.moved.is_empty()
    }
}

/// Product a credential is filed under: its product reference, or the DID
/// it is about.
pub fn product_key(vc: &VerifiableCredential) -> Option<ProductId> {
    match (&vc.subject, vc.product()) {
        (_, Some(product)) => Some(ProductId::Product(product)),
        (Subject::Did(did), None) => Some(ProductId::Did(did.clone())),
        (_, None) => None,
    }
}

#[derive(Debug, Clone)]
pub struct Wallet {
    owner: Identity,
    /// Further identities, e.g. per-product anonymous owner DIDs.
    identities: BTreeMap<Did, Identity>,
    /// Shared so that checkpointing a wallet does not copy its credentials.
    credentials: BTreeMap<String, Arc<VerifiableCredential>>,
    index: BTreeMap<(ProductId, String), BTreeSet<String>>,
}

impl Wallet {
    pub fn new(owner: Identity) -> Self {
        Self { owner, identities: BTreeMap::new(), credentials: BTreeMap::new(), index: BTreeMap::new() }
    }

    pub fn did(&self) -> &Did {
        &self.owner.did
    }

    pub fn owner(&self) -> &Identity {
        &self.owner
    }

    pub fn add_identity(&mut self, identity: Identity) {
        self.identities.insert(identity.did.clone(), identity);
    }

    /// The owner identity or one of the extra identities.
    pub fn identity(&self, did: &Did) -> Option<&Identity> {
        if did == &self.owner.did {
            Some(&self.owner)
        } else {
            self.identities.get(did)
        }
    }

    pub fn identities(&self) -> impl Iterator<Item = &Identity> {
        std::iter::once(&self.owner).chain(self.identities.values())
    }

    pub fn holds(&self, did: &Did) -> bool {
        self.identity(did).is_some()
    }

    /// Whether a DID subject is acceptable here: one of our identities, or a
    /// product whose document one of our identities controls.
    fn may_hold_subject(&self, subject: &Did, registry: &Ledger) -> bool {
        self.holds(subject) || registry.resolve_did(subject).is_ok_and(|doc| self.holds(&doc.controller))
    }

    /// Verifies and files `vc`. Returns false when it was already stored.
    pub fn store_credential(
        &mut self,
        vc: VerifiableCredential,
        registry: &Ledger,
        now: Timestamp,
    ) -> Result<bool, WalletError> {
        if self.credentials.contains_key(&vc.id) {
            return Ok(false);
        }
        let report = verify_credential(&vc, registry, now);
        if !report.is_valid() {
            return Err(WalletError::InvalidCredential { id: vc.id.clone(), report });
        }
        if let Subject::Did(subject) = &vc.subject {
            if !self.may_hold_subject(subject, registry) {
                return Err(WalletError::ForeignSubject { id: vc.id.clone(), subject: subject.clone() });
            }
        }
        self.insert(vc);
        Ok(true)
    }

    /// Files `vc` without verifying it.
    pub(crate) fn insert(&mut self, vc: VerifiableCredential) {
        if let Some(key) = product_key(&vc) {
            let category = vc.category().unwrap_or_default().to_owned();
            self.index.entry((key, category)).or_default().insert(vc.id.clone());
        }
        self.credentials.insert(vc.id.clone(), Arc::new(vc));
    }

    pub fn remove(&mut self, id: &str) -> Option<VerifiableCredential> {
        let vc = self.credentials.remove(id)?;
        if let Some(key) = product_key(&vc) {
            let slot = (key, vc.category().unwrap_or_default().to_owned());
            if let Some(ids) = self.index.get_mut(&slot) {
                ids.remove(id);
                if ids.is_empty() {
                    self.index.remove(&slot);
                }
            }
        }
        Some(Arc::unwrap_or_clone(vc))
    }

    pub fn get(&self, id: &str) -> Option<&VerifiableCredential> {
        self.credentials.get(id).map(Arc::as_ref)
    }

    pub fn credentials(&self) -> impl Iterator<Item = &VerifiableCredential> {
        self.credentials.values().map(Arc::as_ref)
    }

    pub fn len(&self) -> usize {
        self.credentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.credentials.is_empty()
    }

    /// Every credential filed under `product`, ordered by id.
    pub fn for_product(&self, product: &ProductId) -> Vec<&VerifiableCredential> {
        let mut ids: Vec<&String> = self
            .index
            .range((product.clone(), String::new())..)
            .take_while(|((p, _), _)| p == product)
            .flat_map(|(_, ids)| ids)
            .collect();
        ids.sort();
        ids.into_iter().map(|id| self.credentials[id].as_ref()).collect()
    }

    pub fn by_category(&self, product: &ProductId, category: &str) -> Vec<&VerifiableCredential> {
        self.index
            .get(&(product.clone(), category.to_owned()))
            .map(|ids| ids.iter().map(|id| self.credentials[id].as_ref()).collect())
            .unwrap_or_default()
    }

    pub fn categories(&self, product: &ProductId) -> BTreeSet<&str> {
        self.index
            .range((product.clone(), String::new())..)
            .take_while(|((p, _), _)| p == product)
            .map(|((_, c), _)| c.as_str())
            .collect()
    }

    /// The identity that should sign presentations about `product`: the
    /// controller of a product document if we hold it, else the owner.
    pub fn holder_for(&self, product: &ProductId, registry: &Ledger) -> &Identity {
        if let ProductId::Did(did) = product {
            if let Some(id) = registry.resolve_did(did).ok().and_then(|doc| self.identity(&doc.controller)) {
                return id;
            }
        }
        &self.owner
    }

    /// Presents exactly the credentials about `product` whose category the
    /// policy grants to `role`. Revoked credentials are never presented.
    #[allow(clippy::too_many_arguments)]
    pub fn selective_disclose(
        &self,
        product: &ProductId,
        role: Role,
        policy: &AccessPolicy,
        audience: &Did,
        nonce: Nonce,
        registry: &Ledger,
        now: Timestamp,
    ) -> Result<VerifiablePresentation, WalletError> {
        let granted = policy.grants(role)?;
        let selected: Vec<VerifiableCredential> = granted
            .iter()
            .flat_map(|category| self.by_category(product, category))
            .filter(|vc| verify_credential(vc, registry, now).not_revoked)
            .cloned()
            .collect();
        if selected.is_empty() {
            return Err(WalletError::NothingToDisclose { product: product.clone(), role });
        }
        let holder = self.holder_for(product, registry);
        Ok(create_presentation(holder, selected, audience, nonce, now)?)
    }

    /// Moves every credential about `product` to `to`, except credentials
    /// bound to one of this wallet's own identities: those name the seller
    /// personally and stay behind.
    pub fn transfer_credentials(&mut self, to: &mut Wallet, product: &ProductId) -> TransferOutcome {
        let movable: Vec<String> = self
            .for_product(product)
            .into_iter()
            .filter(|vc| !matches!(&vc.subject, Subject::Did(d) if self.holds(d)))
            .map(|vc| vc.id.clone())
            .collect();
        for id in &movable {
            let vc = self.remove(id).expect("listed above");
            to.insert(vc);
        }
        TransferOutcome { moved: movable }
    }
}

#[cfg(test)]
mod tests;
