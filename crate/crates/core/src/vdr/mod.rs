//! Verifiable data registry: a single-node, append-only, fee-charging
//! transaction log holding DID documents, their version history, anchored
//! credential digests and revocation status lists.
//!
//! Every mutation goes through [`Ledger::apply`], which validates a fully
//! formed transaction against the current state before touching anything.
//! Replaying a persisted log runs the same path, so authorization, fees and
//! signatures are re-checked from genesis.

mod fees;
mod persist;
mod shared;
mod status;
mod tx;

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::identity::{
    derive_did, digest_of, verify, Capability, Did, DidDocument, Digest256, Identity, IdentityError, ProductId,
    ProductRef, PublicKey, Signature, Timestamp,
};

pub use fees::FeeSchedule;
pub use shared::SharedLedger;
pub use status::{Revocation, StatusList};
pub use tx::{AnchorPayload, LedgerTransaction, StatusAssignment, TxAuth, TxKind, TxPayload};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("DID {0} is already registered")]
    DuplicateDid(Did),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("account {account} holds {available} tokens, {needed} needed")]
    InsufficientFunds { account: Did, needed: Decimal, available: Decimal },
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("stale update of {did}: expected version {expected}, got {got}")]
    StaleVersion { did: Did, expected: u64, got: u64 },
    #[error("DID {0} is deactivated")]
    Deactivated(Did),
    #[error("digest {digest} is already anchored for {target}")]
    DuplicateAnchor { target: ProductId, digest: Digest256 },
    #[error("status list {list} index {index} is already set")]
    AlreadyRevoked { list: String, index: u32 },
    #[error("invalid fee schedule: {0}")]
    InvalidFees(String),
    #[error("invalid transaction: {0}")]
    Invalid(String),
    #[error("replay failed at line {line}: {reason}")]
    Replay { line: usize, reason: String },
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One anchored digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorRecord {
    pub digest: Digest256,
    pub logical_time: Timestamp,
    pub signer: Did,
    pub seq: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
struct LedgerState {
    documents: BTreeMap<Did, Vec<DidDocument>>,
    accounts: BTreeMap<Did, Decimal>,
    #[serde(serialize_with = "as_pairs")]
    anchors: BTreeMap<ProductId, Vec<AnchorRecord>>,
    status_lists: BTreeMap<String, StatusList>,
    #[serde(serialize_with = "as_pairs")]
    product_lists: BTreeMap<ProductRef, String>,
    #[serde(skip)]
    touched: BTreeMap<ProductId, Vec<u64>>,
    #[serde(skip)]
    anchored: BTreeSet<(ProductId, Digest256)>,
}

/// Maps with structured keys serialize as `[key, value]` pairs so the state
/// stays canonicalizable.
fn as_pairs<K: Serialize, V: Serialize, S: serde::Serializer>(map: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.iter())
}

/// State change produced by validation, applied only once validation passed.
enum Effect {
    Credit(Did, Decimal),
    PutDocument(DidDocument),
    Anchor { target: ProductId, record: AnchorRecord, assignment: Option<(String, u32)>, document: Option<DidDocument> },
    CreateList(StatusList),
    Revoke { list: String, index: u32, revocation: Revocation },
}

#[derive(Debug, Clone)]
pub struct Ledger {
    fees: FeeSchedule,
    log: Vec<LedgerTransaction>,
    state: LedgerState,
}

impl Ledger {
    pub fn new(fees: FeeSchedule) -> Result<Self, LedgerError> {
        fees.validate()?;
        Ok(Self { fees, log: Vec::new(), state: LedgerState::default() })
    }

    pub fn fees(&self) -> &FeeSchedule {
        &self.fees
    }

    pub fn transactions(&self) -> &[LedgerTransaction] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    pub fn balance(&self, account: &Did) -> Decimal {
        self.state.accounts.get(account).copied().unwrap_or(Decimal::ZERO)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&Did, &Decimal)> {
        self.state.accounts.iter()
    }

    // ---- queries -------------------------------------------------------

    /// Latest version of a DID document, deactivated or not.
    pub fn resolve_did(&self, did: &Did) -> Result<&DidDocument, LedgerError> {
        self.state
            .documents
            .get(did)
            .and_then(|v| v.last())
            .ok_or_else(|| LedgerError::NotFound(did.to_string()))
    }

    pub fn document_versions(&self, did: &Did) -> Result<&[DidDocument], LedgerError> {
        self.state.documents.get(did).map(Vec::as_slice).ok_or_else(|| LedgerError::NotFound(did.to_string()))
    }

    pub fn document_version(&self, did: &Did, version: u64) -> Result<&DidDocument, LedgerError> {
        self.document_versions(did)?
            .iter()
            .find(|d| d.version_id == version)
            .ok_or_else(|| LedgerError::NotFound(format!("{did} version {version}")))
    }

    /// Registered and not deactivated.
    pub fn is_active(&self, did: &Did) -> bool {
        self.resolve_did(did).is_ok_and(|d| !d.deactivated)
    }

    /// Every transaction touching `target`, in sequence order.
    pub fn history(&self, target: &ProductId) -> Result<Vec<&LedgerTransaction>, LedgerError> {
        let seqs = self.state.touched.get(target).ok_or_else(|| LedgerError::NotFound(target.to_string()))?;
        Ok(seqs.iter().map(|s| &self.log[*s as usize]).collect())
    }

    /// Controller sequence across the document's versions, consecutive
    /// duplicates collapsed. For a product DID this is its owner history.
    pub fn owner_history(&self, did: &Did) -> Result<Vec<Did>, LedgerError> {
        let mut owners: Vec<Did> = Vec::new();
        for doc in self.document_versions(did)? {
            if owners.last() != Some(&doc.controller) {
                owners.push(doc.controller.clone());
            }
        }
        Ok(owners)
    }

    pub fn anchors(&self, target: &ProductId) -> &[AnchorRecord] {
        self.state.anchors.get(target).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_anchored(&self, target: &ProductId, digest: &Digest256) -> bool {
        self.state.anchored.contains(&(target.clone(), *digest))
    }

    pub fn status_list(&self, id: &str) -> Option<&StatusList> {
        self.state.status_lists.get(id)
    }

    /// The status list bound to a product at creation, if any.
    pub fn product_status_list(&self, product: &ProductRef) -> Option<&StatusList> {
        self.state.product_lists.get(product).and_then(|id| self.state.status_lists.get(id))
    }

    /// Product DIDs whose latest document links `product` via alsoKnownAs.
    /// Linear scan; registries offer no reverse index.
    pub fn find_by_product(&self, product: &ProductRef) -> Vec<&Did> {
        self.state
            .documents
            .iter()
            .filter(|(_, versions)| versions.last().and_then(|d| d.also_known_as.as_ref()) == Some(product))
            .map(|(did, _)| did)
            .collect()
    }

    /// DIDs of every registered document, in DID order.
    pub fn dids(&self) -> impl Iterator<Item = &Did> {
        self.state.documents.keys()
    }

    /// Digest of the resolved state (documents, balances, anchors, lists).
    pub fn state_digest(&self) -> Digest256 {
        digest_of(&self.state).expect("ledger state is always canonicalizable")
    }

    // ---- operations ----------------------------------------------------

    pub fn deposit(&mut self, account: &Did, amount: Decimal, now: Timestamp) -> Result<LedgerTransaction, LedgerError> {
        self.submit(TxPayload::Deposit { account: account.clone(), amount }, None, now)
    }

    /// Registers `doc` (version 1) in one transaction, fee paid by the signer,
    /// who must be the document's controller.
    pub fn create_did(
        &mut self,
        doc: DidDocument,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        self.submit(TxPayload::CreateDid { document: doc }, Some(signer), now)
    }

    pub fn update_did(
        &mut self,
        doc: DidDocument,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        self.submit(TxPayload::UpdateDid { document: doc }, Some(signer), now)
    }

    pub fn deactivate_did(
        &mut self,
        did: &Did,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        let current = self.resolve_did(did)?;
        if current.deactivated {
            return Err(LedgerError::Deactivated(did.clone()));
        }
        let version_id = current.version_id + 1;
        self.submit(TxPayload::DeactivateDid { did: did.clone(), version_id }, Some(signer), now)
    }

    /// Anchors `digest` against a product DID or a GTIN-based product
    /// reference. Re-anchoring the same digest returns the original
    /// transaction and charges nothing.
    pub fn anchor_hash(
        &mut self,
        target: ProductId,
        digest: Digest256,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        self.anchor(target, digest, None, signer, now)
    }

    /// Anchors a credential digest for `product` and registers the signer as
    /// holder of slot `assignment` in the product's status list.
    pub fn anchor_with_status(
        &mut self,
        product: ProductRef,
        digest: Digest256,
        assignment: StatusAssignment,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        self.anchor(ProductId::Product(product), digest, Some(assignment), signer, now)
    }

    fn anchor(
        &mut self,
        target: ProductId,
        digest: Digest256,
        status: Option<StatusAssignment>,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        if let Some(existing) = self.anchors(&target).iter().find(|a| a.digest == digest) {
            return Ok(self.log[existing.seq as usize].clone());
        }
        let document_version = match &target {
            ProductId::Did(did) => {
                let doc = self.resolve_did(did)?;
                (doc.controller != signer.did && doc.delegation_for(&signer.did).is_some())
                    .then_some(doc.version_id + 1)
            }
            ProductId::Product(_) => None,
        };
        self.submit(TxPayload::AnchorHash(AnchorPayload { target, digest, status, document_version }), Some(signer), now)
    }

    pub fn create_status_list(
        &mut self,
        list_id: &str,
        product: Option<ProductRef>,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        self.submit(TxPayload::StatusListCreate { list_id: list_id.to_owned(), product }, Some(signer), now)
    }

    /// Sets bit `index` of a status list. Setting an already-set bit is a
    /// no-op returning the transaction that set it.
    pub fn revoke(
        &mut self,
        list_id: &str,
        index: u32,
        signer: &Identity,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        let list = self.status_list(list_id).ok_or_else(|| LedgerError::NotFound(format!("status list {list_id}")))?;
        if let Some(rev) = list.revocation(index) {
            return Ok(self.log[rev.seq as usize].clone());
        }
        let bits_digest = list.digest_with(index);
        self.submit(TxPayload::StatusListUpdate { list_id: list_id.to_owned(), index, bits_digest }, Some(signer), now)
    }

    /// Runs `f` as one unit: if it fails, every transaction it appended is
    /// rolled back and state is rebuilt from the remaining log.
    pub fn atomic<T, E>(&mut self, f: impl FnOnce(&mut Ledger) -> Result<T, E>) -> Result<T, E> {
        let mark = self.log.len();
        let result = f(self);
        if result.is_err() && self.log.len() != mark {
            self.rollback_to(mark);
        }
        result
    }

    /// Drops every transaction from position `len` on and rebuilds state.
    pub fn rollback_to(&mut self, len: usize) {
        if len >= self.log.len() {
            return;
        }
        let mut log = std::mem::take(&mut self.log);
        log.truncate(len);
        self.state = LedgerState::default();
        for tx in log {
            self.apply(tx).expect("previously committed transaction re-applies");
        }
    }

    fn submit(
        &mut self,
        payload: TxPayload,
        signer: Option<&Identity>,
        now: Timestamp,
    ) -> Result<LedgerTransaction, LedgerError> {
        let fee_tokens = self.fee_for(&payload);
        let mut tx = LedgerTransaction {
            seq: self.log.len() as u64,
            logical_time: now,
            payload,
            fee_tokens,
            fee_payer: signer.map(|s| s.did.clone()),
            auth: signer.map(|s| TxAuth {
                signer: s.did.clone(),
                public_key: s.keys.public_key(),
                signature: Signature::from_bytes([0u8; 64]),
            }),
        };
        if let Some(s) = signer {
            let signature = s.keys.sign(&tx.signing_bytes()?);
            tx.auth.as_mut().expect("set above").signature = signature;
        }
        self.apply(tx.clone())?;
        Ok(tx)
    }

    fn fee_for(&self, payload: &TxPayload) -> Decimal {
        match payload {
            TxPayload::Deposit { .. } => Decimal::ZERO,
            TxPayload::CreateDid { .. } => self.fees.create_did,
            TxPayload::UpdateDid { .. } => self.fees.update_did,
            TxPayload::DeactivateDid { .. } => self.fees.deactivate_did,
            TxPayload::AnchorHash(a) => match a.target {
                ProductId::Did(_) => self.fees.anchor_hash,
                ProductId::Product(_) => self.fees.status_list_update,
            },
            TxPayload::StatusListCreate { .. } => self.fees.status_list_create,
            TxPayload::StatusListUpdate { .. } => self.fees.status_list_update,
        }
    }

    /// Validates a complete transaction and appends it. The only mutation path.
    pub fn apply(&mut self, tx: LedgerTransaction) -> Result<(), LedgerError> {
        let effect = self.validate(&tx)?;
        self.execute(tx, effect);
        Ok(())
    }

    fn validate(&self, tx: &LedgerTransaction) -> Result<Effect, LedgerError> {
        if tx.seq != self.log.len() as u64 {
            return Err(LedgerError::Invalid(format!("sequence {} where {} expected", tx.seq, self.log.len())));
        }
        if let Some(last) = self.log.last() {
            if tx.logical_time < last.logical_time {
                return Err(LedgerError::Invalid(format!(
                    "logical time {} precedes last committed {}",
                    tx.logical_time, last.logical_time
                )));
            }
        }
        let expected_fee = self.fee_for(&tx.payload);
        if tx.fee_tokens != expected_fee {
            return Err(LedgerError::Invalid(format!("fee {} where {} expected", tx.fee_tokens, expected_fee)));
        }

        if let TxPayload::Deposit { account, amount } = &tx.payload {
            if tx.auth.is_some() || tx.fee_payer.is_some() {
                return Err(LedgerError::Invalid("deposits carry no signer".into()));
            }
            if *amount <= Decimal::ZERO {
                return Err(LedgerError::Invalid("deposit amount must be positive".into()));
            }
            return Ok(Effect::Credit(account.clone(), *amount));
        }

        let auth = tx.auth.as_ref().ok_or_else(|| LedgerError::Invalid("missing signature".into()))?;
        if tx.fee_payer.as_ref() != Some(&auth.signer) {
            return Err(LedgerError::Invalid("fee payer must be the signer".into()));
        }
        if !verify(&auth.public_key, &tx.signing_bytes()?, &auth.signature) {
            return Err(LedgerError::Unauthorized("transaction signature does not verify".into()));
        }
        let available = self.balance(&auth.signer);
        if available < tx.fee_tokens {
            return Err(LedgerError::InsufficientFunds {
                account: auth.signer.clone(),
                needed: tx.fee_tokens,
                available,
            });
        }
        let signer = &auth.signer;
        let key = &auth.public_key;

        match &tx.payload {
            TxPayload::Deposit { .. } => unreachable!("handled above"),
            TxPayload::CreateDid { document } => {
                if self.state.documents.contains_key(&document.id) {
                    return Err(LedgerError::DuplicateDid(document.id.clone()));
                }
                if document.version_id != 1 {
                    return Err(LedgerError::StaleVersion {
                        did: document.id.clone(),
                        expected: 1,
                        got: document.version_id,
                    });
                }
                if document.deactivated {
                    return Err(LedgerError::Invalid("cannot create a deactivated document".into()));
                }
                if &document.controller != signer || !self.authenticates(signer, key, Some(document)) {
                    return Err(LedgerError::Unauthorized(format!(
                        "{signer} is not the authenticated controller of the new document"
                    )));
                }
                Ok(Effect::PutDocument(document.clone()))
            }
            TxPayload::UpdateDid { document } => {
                let current = self.active_document(&document.id)?;
                self.check_controller(current, signer, key)?;
                if document.version_id != current.version_id + 1 {
                    return Err(LedgerError::StaleVersion {
                        did: document.id.clone(),
                        expected: current.version_id + 1,
                        got: document.version_id,
                    });
                }
                if document.deactivated {
                    return Err(LedgerError::Invalid("use deactivateDid to deactivate".into()));
                }
                Ok(Effect::PutDocument(document.clone()))
            }
            TxPayload::DeactivateDid { did, version_id } => {
                let current = self.active_document(did)?;
                self.check_controller(current, signer, key)?;
                if *version_id != current.version_id + 1 {
                    return Err(LedgerError::StaleVersion {
                        did: did.clone(),
                        expected: current.version_id + 1,
                        got: *version_id,
                    });
                }
                let mut doc = current.next_version();
                doc.deactivated = true;
                Ok(Effect::PutDocument(doc))
            }
            TxPayload::AnchorHash(anchor) => self.validate_anchor(tx, anchor, signer, key),
            TxPayload::StatusListCreate { list_id, product } => {
                if list_id.is_empty() {
                    return Err(LedgerError::Invalid("empty status list id".into()));
                }
                if self.state.status_lists.contains_key(list_id) {
                    return Err(LedgerError::Invalid(format!("status list {list_id} already exists")));
                }
                if let Some(p) = product {
                    if self.state.product_lists.contains_key(p) {
                        return Err(LedgerError::Invalid(format!("product {p} already has a status list")));
                    }
                }
                if !self.authenticates(signer, key, None) {
                    return Err(LedgerError::Unauthorized(format!("key is not registered for {signer}")));
                }
                Ok(Effect::CreateList(StatusList::new(list_id.clone(), signer.clone(), product.clone())))
            }
            TxPayload::StatusListUpdate { list_id, index, bits_digest } => {
                let list = self
                    .state
                    .status_lists
                    .get(list_id)
                    .ok_or_else(|| LedgerError::NotFound(format!("status list {list_id}")))?;
                if &list.owner != signer && list.holder(*index) != Some(signer) {
                    return Err(LedgerError::Unauthorized(format!(
                        "{signer} neither owns status list {list_id} nor holds index {index}"
                    )));
                }
                if !self.authenticates(signer, key, None) {
                    return Err(LedgerError::Unauthorized(format!("key is not registered for {signer}")));
                }
                if list.is_set(*index) {
                    return Err(LedgerError::AlreadyRevoked { list: list_id.clone(), index: *index });
                }
                if *bits_digest != list.digest_with(*index) {
                    return Err(LedgerError::Invalid("status bits digest mismatch".into()));
                }
                Ok(Effect::Revoke {
                    list: list_id.clone(),
                    index: *index,
                    revocation: Revocation { at: tx.logical_time, seq: tx.seq },
                })
            }
        }
    }

    fn validate_anchor(
        &self,
        tx: &LedgerTransaction,
        anchor: &AnchorPayload,
        signer: &Did,
        key: &PublicKey,
    ) -> Result<Effect, LedgerError> {
        if self.is_anchored(&anchor.target, &anchor.digest) {
            return Err(LedgerError::DuplicateAnchor { target: anchor.target.clone(), digest: anchor.digest });
        }
        let record = AnchorRecord {
            digest: anchor.digest,
            logical_time: tx.logical_time,
            signer: signer.clone(),
            seq: tx.seq,
        };
        match &anchor.target {
            ProductId::Did(did) => {
                let doc = self.active_document(did)?;
                if anchor.status.is_some() {
                    return Err(LedgerError::Invalid("status assignments need a product reference target".into()));
                }
                if &doc.controller == signer {
                    if !self.authenticates(signer, key, Some(doc)) {
                        return Err(LedgerError::Unauthorized(format!("key is not registered for {signer}")));
                    }
                    if anchor.document_version.is_some() {
                        return Err(LedgerError::Invalid("controller anchors consume no delegation".into()));
                    }
                    return Ok(Effect::Anchor { target: anchor.target.clone(), record, assignment: None, document: None });
                }
                let permitted = doc
                    .delegation_for(signer)
                    .is_some_and(|d| d.capability == Capability::AnchorEvent);
                if !permitted {
                    return Err(LedgerError::Unauthorized(format!("{signer} holds no anchor-event delegation on {did}")));
                }
                if !self.authenticates(signer, key, None) {
                    return Err(LedgerError::Unauthorized(format!("key is not registered for delegate {signer}")));
                }
                let mut next = doc.next_version();
                next.delegations.retain(|d| &d.delegate != signer);
                if anchor.document_version != Some(next.version_id) {
                    return Err(LedgerError::StaleVersion {
                        did: did.clone(),
                        expected: next.version_id,
                        got: anchor.document_version.unwrap_or(0),
                    });
                }
                Ok(Effect::Anchor { target: anchor.target.clone(), record, assignment: None, document: Some(next) })
            }
            ProductId::Product(product) => {
                if anchor.document_version.is_some() {
                    return Err(LedgerError::Invalid("product-reference anchors carry no document version".into()));
                }
                // any registered agent may anchor against a GTIN-based reference
                let registered = self.resolve_did(signer).is_ok_and(|d| !d.deactivated && d.has_key(key));
                if !registered {
                    return Err(LedgerError::Unauthorized(format!("{signer} is not a registered agent")));
                }
                let assignment = match &anchor.status {
                    None => None,
                    Some(StatusAssignment { list_id, index }) => {
                        let list = self
                            .state
                            .status_lists
                            .get(list_id)
                            .ok_or_else(|| LedgerError::NotFound(format!("status list {list_id}")))?;
                        if list.product.as_ref() != Some(product) {
                            return Err(LedgerError::Invalid(format!("status list {list_id} is not bound to {product}")));
                        }
                        if list.holder(*index).is_some() || list.is_set(*index) {
                            return Err(LedgerError::Invalid(format!("status index {index} of {list_id} is taken")));
                        }
                        Some((list_id.clone(), *index))
                    }
                };
                Ok(Effect::Anchor { target: anchor.target.clone(), record, assignment, document: None })
            }
        }
    }

    fn active_document(&self, did: &Did) -> Result<&DidDocument, LedgerError> {
        let doc = self.resolve_did(did)?;
        if doc.deactivated {
            return Err(LedgerError::Deactivated(did.clone()));
        }
        Ok(doc)
    }

    fn check_controller(&self, current: &DidDocument, signer: &Did, key: &PublicKey) -> Result<(), LedgerError> {
        if &current.controller == signer && self.authenticates(signer, key, Some(current)) {
            return Ok(());
        }
        if current.delegation_for(signer).is_some() {
            return Err(LedgerError::Unauthorized(format!(
                "{signer} holds only an anchor-event delegation on {}, which does not permit document changes",
                current.id
            )));
        }
        Err(LedgerError::Unauthorized(format!("{signer} is not the controller of {}", current.id)))
    }

    /// Does `key` speak for `signer`? True when the key is published in the
    /// signer's own active document, when the signer's DID is derived from
    /// the key, or when `target` lists the key with `signer` as its controller.
    fn authenticates(&self, signer: &Did, key: &PublicKey, target: Option<&DidDocument>) -> bool {
        if let Ok(doc) = self.resolve_did(signer) {
            if !doc.deactivated && doc.has_key(key) {
                return true;
            }
        }
        if derive_did(key, signer.method()).is_ok_and(|d| &d == signer) {
            return true;
        }
        target.is_some_and(|doc| {
            doc.verification_methods.iter().any(|vm| &vm.public_key == key && &vm.controller == signer)
        })
    }

    fn execute(&mut self, tx: LedgerTransaction, effect: Effect) {
        if let Some(payer) = &tx.fee_payer {
            let balance = self.state.accounts.entry(payer.clone()).or_insert(Decimal::ZERO);
            *balance -= tx.fee_tokens;
        }
        match effect {
            Effect::Credit(account, amount) => {
                *self.state.accounts.entry(account).or_insert(Decimal::ZERO) += amount;
            }
            Effect::PutDocument(doc) => {
                self.state.documents.entry(doc.id.clone()).or_default().push(doc);
            }
            Effect::Anchor { target, record, assignment, document } => {
                self.state.anchored.insert((target.clone(), record.digest));
                if let Some((list, index)) = assignment {
                    let list = self.state.status_lists.get_mut(&list).expect("validated");
                    list.assign(index, record.signer.clone());
                }
                if let Some(doc) = document {
                    self.state.documents.entry(doc.id.clone()).or_default().push(doc);
                }
                self.state.anchors.entry(target).or_default().push(record);
            }
            Effect::CreateList(list) => {
                if let Some(p) = &list.product {
                    self.state.product_lists.insert(p.clone(), list.id.clone());
                    self.state.touched.entry(ProductId::Product(p.clone())).or_default().push(tx.seq);
                }
                self.state.status_lists.insert(list.id.clone(), list);
            }
            Effect::Revoke { list, index, revocation } => {
                let list = self.state.status_lists.get_mut(&list).expect("validated");
                if let Some(p) = &list.product {
                    self.state.touched.entry(ProductId::Product(p.clone())).or_default().push(tx.seq);
                }
                list.set(index, revocation);
            }
        }
        if let Some(target) = tx.target() {
            self.state.touched.entry(target).or_default().push(tx.seq);
        }
        self.log.push(tx);
    }
}
