//! GTIN + serial only: ownership is the one unrevoked transfer credential
//! registered in the product's status list.

use rust_decimal::Decimal;

use super::{Agent, LifecycleError, MintReceipt, Network, ProductState, Proposal};
use crate::credentials::{issue_transfer_credential, revoke, SaleInfo, TransferCredential, VerifiableCredential};
use crate::dpp::{create_original_dpp, issue_update_credential, ClaimSet, DppInput};
use crate::identity::{Did, ProductId, ProductRef, Timestamp};
use crate::vdr::{Ledger, LedgerTransaction, StatusAssignment};

/// Id of the status list created for `product` at mint.
pub fn status_list_id(product: &ProductRef) -> String {
    format!("status/{product}")
}

/// Transfer credentials in `agent`'s wallet naming it as buyer of `product`.
fn held_links(agent: &Agent, product: &ProductRef) -> Vec<TransferCredential> {
    agent
        .wallet
        .by_category(&ProductId::Product(product.clone()), "ownership")
        .into_iter()
        .filter_map(|vc| TransferCredential::from_credential(vc.clone()).ok())
        .filter(|tc| tc.buyer() == agent.did() && &tc.product() == product)
        .collect()
}

fn is_revoked(tc: &TransferCredential, registry: &Ledger, now: Timestamp) -> bool {
    tc.status()
        .and_then(|s| registry.status_list(&s.list_id).map(|l| l.is_revoked_at(s.index, now)))
        .unwrap_or(true)
}

impl Network {
    /// Creates the product's status list, issues the original passport on
    /// GTIN + serial and anchors its manifest. No product DID exists.
    pub fn mint_p082(&mut self, manufacturer: &str, input: DppInput) -> Result<MintReceipt, LifecycleError> {
        self.require_listed(manufacturer)?;
        if self.products.contains_key(&input.product) {
            return Err(LifecycleError::AlreadyMinted(input.product));
        }
        self.atomic(&[manufacturer], |net| {
            let now = net.tick();
            let product = input.product.clone();
            let mut maker = net.take(manufacturer)?;
            let list = net.ledger.create_status_list(&status_list_id(&product), Some(product.clone()), &maker.identity, now)?;
            let dpp = create_original_dpp(&maker.identity, input, None, &net.taxonomy, &net.ledger, now)?;
            let manifest = dpp.manifest.as_ref().expect("GTIN-only passports carry a manifest");
            let anchor = net.ledger.anchor_hash(ProductId::Product(product.clone()), manifest.digest(), &maker.identity, now)?;
            for vc in dpp.credentials() {
                maker.wallet.store_credential(vc.clone(), &net.ledger, now)?;
            }
            net.put(maker);

            net.log_tx(manufacturer, Some(&product), &list);
            net.log(manufacturer, "dpp.create", Some(&product), &[
                ("mode", "credentials".to_owned()),
                ("originals", dpp.originals.len().to_string()),
            ]);
            net.log_tx(manufacturer, Some(&product), &anchor);
            net.products.insert(product.clone(), ProductState {
                proposal: Proposal::P082,
                product: product.clone(),
                did: None,
                manufacturer: manufacturer.to_owned(),
                owners: vec![manufacturer.to_owned()],
            });
            Ok(MintReceipt { product: ProductId::Product(product), dpp, transactions: vec![list, anchor] })
        })
    }

    /// The unrevoked transfer credential `agent` holds for `product`, or
    /// `None` for a manufacturer that has not sold it yet.
    fn current_link(&self, product: &ProductRef, agent: &str) -> Result<Option<TransferCredential>, LifecycleError> {
        let state = self.require_proposal(product, Proposal::P082)?;
        let holder = self.agent(agent)?;
        let links = held_links(holder, product);
        if let Some(head) = links.iter().find(|tc| !is_revoked(tc, &self.ledger, self.now())) {
            return Ok(Some(head.clone()));
        }
        let unsold = self.ledger.product_status_list(product).is_some_and(|l| l.holders().next().is_none());
        if state.manufacturer == agent && unsold {
            return Ok(None);
        }
        if links.is_empty() && state.manufacturer != agent {
            Err(LifecycleError::NotOwner { agent: agent.to_owned(), product: product.to_string() })
        } else {
            Err(LifecycleError::DoubleSale { agent: agent.to_owned(), product: product.clone() })
        }
    }

    /// One sale: the seller issues the next link to the buyer, revokes its
    /// own link, and the buyer anchors the new link with its status slot.
    pub fn transfer_p082(
        &mut self,
        product: &ProductRef,
        seller: &str,
        buyer: &str,
        price: Option<Decimal>,
    ) -> Result<TransferCredential, LifecycleError> {
        if seller == buyer {
            return Err(LifecycleError::SameParty(seller.to_owned()));
        }
        self.agent(buyer)?;
        let previous = self.current_link(product, seller)?;
        self.atomic(&[seller, buyer], |net| {
            let now = net.tick();
            let mut from = net.take(seller)?;
            let mut to = net.take(buyer)?;
            let sale = SaleInfo { date: now, price };
            let tc = issue_transfer_credential(&from.identity, to.did(), product, previous.as_ref(), sale, &net.ledger, now)?;
            net.log(seller, "credential.issueTransfer", Some(product), &[
                ("id", tc.credential().id.clone()),
                ("links", tc.len().to_string()),
            ]);
            if let Some(prev) = &previous {
                let status = prev.status().expect("held links carry a status");
                let (_, tx) = revoke(&from.identity, &status.list_id, status.index, &mut net.ledger, now)?;
                net.log_tx(seller, Some(product), &tx);
            }
            let status = tc.status().expect("issued links carry a status");
            let assignment = StatusAssignment { list_id: status.list_id.clone(), index: status.index };
            let anchor = net.ledger.anchor_with_status(product.clone(), tc.credential().digest(), assignment, &to.identity, now)?;
            net.log_tx(buyer, Some(product), &anchor);

            to.wallet.store_credential(tc.credential().clone(), &net.ledger, now)?;
            let moved = from.wallet.transfer_credentials(&mut to.wallet, &ProductId::Product(product.clone())).moved;
            net.put(from);
            net.put(to);
            net.log(seller, "wallet.transfer", Some(product), &[("to", buyer.to_owned()), ("count", moved.len().to_string())]);
            net.products.get_mut(product).expect("checked above").owners.push(buyer.to_owned());
            Ok(tc)
        })
    }

    /// A repair: the workshop issues the repair credential into the owner's
    /// wallet and anchors its digest against GTIN + serial.
    pub fn record_event_p082(
        &mut self,
        product: &ProductRef,
        owner: &str,
        workshop: &str,
        claim: &ClaimSet,
    ) -> Result<(VerifiableCredential, LedgerTransaction), LifecycleError> {
        self.require_listed(workshop)?;
        self.current_link(product, owner)?;
        self.atomic(&[owner], |net| {
            let now = net.tick();
            let workshop_id = net.agent(workshop)?.identity.clone();
            let target = ProductId::Product(product.clone());
            let vc = issue_update_credential(&workshop_id, &target, claim, &net.taxonomy, &net.ledger, now)?;
            net.log(workshop, "credential.issue", Some(product), &[("id", vc.id.clone()), ("category", claim.category.clone())]);
            let anchor = net.ledger.anchor_hash(target, vc.digest(), &workshop_id, now)?;
            net.log_tx(workshop, Some(product), &anchor);
            let mut holder = net.take(owner)?;
            holder.wallet.store_credential(vc.clone(), &net.ledger, now)?;
            net.put(holder);
            net.log(owner, "wallet.store", Some(product), &[("id", vc.id.clone())]);
            Ok((vc, anchor))
        })
    }

    /// Slots of `product`'s status list that are registered and unrevoked
    /// at `at`, with their holders.
    pub fn unrevoked_heads(&self, product: &ProductRef, at: Timestamp) -> Vec<(u32, Did)> {
        self.ledger
            .product_status_list(product)
            .map(|l| l.holders().filter(|(i, _)| !l.is_revoked_at(*i, at)).map(|(i, d)| (i, d.clone())).collect())
            .unwrap_or_default()
    }

    /// The head of the chain held by `agent`, if it currently owns `product`.
    pub fn head_p082(&self, product: &ProductRef, agent: &str) -> Option<TransferCredential> {
        self.current_link(product, agent).ok().flatten()
    }
}
