//! Fixture world shared by the credential tests: one registry, registered
//! agents, and a serialized product whose status list agent 0 owns.

use std::collections::BTreeSet;

use rust_decimal::Decimal;

use super::*;
use crate::identity::{DidDocument, Gtin, Identity, ProductRef, Timestamp, DEFAULT_METHOD};
use crate::vdr::{FeeSchedule, Ledger, StatusAssignment};

pub(crate) fn agent(seed: u8) -> Identity {
    Identity::generate(&[seed; 32], DEFAULT_METHOD).unwrap()
}

pub(crate) struct World {
    pub ledger: Ledger,
    pub ids: Vec<Identity>,
    pub product: ProductRef,
    pub list_id: String,
    clock: u64,
}

impl World {
    /// `n` registered agents with seeds 1..=n; agent 0 is the manufacturer.
    pub fn new(n: u8) -> Self {
        let mut ledger = Ledger::new(FeeSchedule::default()).unwrap();
        let mut ids = Vec::new();
        for seed in 1..=n {
            let id = agent(seed);
            ledger.deposit(&id.did, Decimal::new(10_000, 0), Timestamp(0)).unwrap();
            ledger.create_did(DidDocument::for_identity(&id), &id, Timestamp(0)).unwrap();
            ids.push(id);
        }
        let product = ProductRef::item(Gtin::parse("4006381333931").unwrap(), "SN-1").unwrap();
        let list_id = format!("status/{product}");
        ledger.create_status_list(&list_id, Some(product.clone()), &ids[0], Timestamp(0)).unwrap();
        Self { ledger, ids, product, list_id, clock: 0 }
    }

    pub fn tick(&mut self) -> Timestamp {
        self.clock += 1;
        Timestamp(self.clock)
    }

    pub fn now(&self) -> Timestamp {
        Timestamp(self.clock)
    }

    pub fn trusted(&self) -> BTreeSet<Did> {
        BTreeSet::from([self.ids[0].did.clone()])
    }

    /// Honest sale: issue, seller revokes its own link, buyer anchors.
    pub fn sell(&mut self, seller: usize, buyer: usize, prev: Option<&TransferCredential>) -> TransferCredential {
        let now = self.tick();
        let tc = self.issue(seller, buyer, prev, now);
        if let Some(prev) = prev {
            let status = prev.status().unwrap().clone();
            revoke(&self.ids[seller], &status.list_id, status.index, &mut self.ledger, now).unwrap();
        }
        self.register(buyer, &tc, now);
        tc
    }

    pub fn issue(&self, seller: usize, buyer: usize, prev: Option<&TransferCredential>, now: Timestamp) -> TransferCredential {
        let sale = SaleInfo { date: now, price: Some(Decimal::new(9990, 2)) };
        issue_transfer_credential(&self.ids[seller], &self.ids[buyer].did, &self.product, prev, sale, &self.ledger, now)
            .unwrap()
    }

    pub fn register(&mut self, buyer: usize, tc: &TransferCredential, now: Timestamp) {
        let status = tc.status().unwrap();
        let assignment = StatusAssignment { list_id: status.list_id.clone(), index: status.index };
        self.ledger
            .anchor_with_status(self.product.clone(), tc.credential().digest(), assignment, &self.ids[buyer], now)
            .unwrap();
    }

    /// Honest chain 0 -> 1 -> ... -> len.
    pub fn chain(&mut self, len: usize) -> TransferCredential {
        let mut head = self.sell(0, 1, None);
        for i in 1..len {
            head = self.sell(i, i + 1, Some(&head));
        }
        head
    }

    pub fn verify(&self, tc: &TransferCredential) -> ChainReport {
        verify_transfer_chain(tc, &self.ledger, &self.trusted(), self.now())
    }
}

/// Re-nests `links` (root first) without re-signing anything.
pub(crate) fn rechain(mut links: Vec<VerifiableCredential>) -> TransferCredential {
    if let Some(root) = links.first_mut() {
        root.claims.insert("previous".into(), serde_json::Value::Null);
    }
    for i in 1..links.len() {
        let prev = serde_json::to_value(&links[i - 1]).unwrap();
        links[i].claims.insert("previous".into(), prev);
    }
    TransferCredential::from_credential(links.pop().unwrap()).unwrap()
}

pub(crate) fn resign(vc: &mut VerifiableCredential, signer: &Identity) {
    vc.issuer = signer.did.clone();
    vc.proof.verification_method = signer.key_ref();
    vc.proof.signature = signer.keys.sign(&vc.signing_bytes().unwrap());
}
