//! DID per product: the document's controller is the owner, repairs are
//! anchored by workshops under a single-use delegation from the owner.

use rust_decimal::Decimal;

use super::{Agent, LifecycleError, MintReceipt, Network, ProductState, Proposal, TransferReceipt};
use crate::credentials::VerifiableCredential;
use crate::dpp::{create_original_dpp, issue_update_credential, ClaimSet, DppInput};
use crate::identity::{Capability, Delegation, Did, DidDocument, Identity, ProductId, ProductRef, Service, Timestamp};
use crate::vdr::LedgerTransaction;

/// Service name under which a product document links a component.
pub const COMPONENT_SERVICE: &str = "component";

impl Network {
    /// Registers a product DID controlled by `manufacturer`, whose document
    /// links GTIN + serial, carries the passport record and lists components.
    pub fn mint_p081(&mut self, manufacturer: &str, input: DppInput) -> Result<MintReceipt, LifecycleError> {
        self.require_listed(manufacturer)?;
        if self.products.contains_key(&input.product) {
            return Err(LifecycleError::AlreadyMinted(input.product));
        }
        self.atomic(&[manufacturer], |net| {
            let now = net.tick();
            let product = input.product.clone();
            let did = net.fresh_identity()?.did;
            let mut maker = net.take(manufacturer)?;
            let dpp = create_original_dpp(&maker.identity, input.clone(), Some(&did), &net.taxonomy, &net.ledger, now)?;

            let mut doc = DidDocument::new(did.clone(), maker.did().clone());
            doc.add_key(maker.identity.keys.key_id(), maker.did().clone(), maker.identity.keys.public_key());
            doc.also_known_as = Some(product.clone());
            doc.properties = dpp.document_properties();
            doc.services = input
                .components
                .iter()
                .map(|c| Service { name: COMPONENT_SERVICE.to_owned(), endpoint: c.to_string() })
                .collect();
            let tx = net.ledger.create_did(doc, &maker.identity, now)?;
            for vc in dpp.credentials() {
                maker.wallet.store_credential(vc.clone(), &net.ledger, now)?;
            }
            net.put(maker);

            net.log(manufacturer, "dpp.create", Some(&product), &[
                ("mode", format!("{:?}", dpp.record.mode).to_lowercase()),
                ("originals", dpp.originals.len().to_string()),
            ]);
            net.log_tx(manufacturer, Some(&product), &tx);
            net.products.insert(product.clone(), ProductState {
                proposal: Proposal::P081,
                product,
                did: Some(did.clone()),
                manufacturer: manufacturer.to_owned(),
                owners: vec![manufacturer.to_owned()],
            });
            Ok(MintReceipt { product: ProductId::Did(did), dpp, transactions: vec![tx] })
        })
    }

    /// Hands control of the product document to a fresh anonymous DID of
    /// the buyer. The seller pays the update.
    pub fn transfer_p081(&mut self, product: &ProductRef, seller: &str, buyer: &str) -> Result<TransferReceipt, LifecycleError> {
        self.transfer_p081_to(product, seller, buyer, None)
    }

    /// As [`Network::transfer_p081`], but to an anonymous DID the buyer
    /// already holds. Reusing one across products links them publicly and
    /// yields a warning.
    pub fn transfer_p081_reusing(
        &mut self,
        product: &ProductRef,
        seller: &str,
        buyer: &str,
        anon: &Did,
    ) -> Result<TransferReceipt, LifecycleError> {
        self.transfer_p081_to(product, seller, buyer, Some(anon))
    }

    fn transfer_p081_to(
        &mut self,
        product: &ProductRef,
        seller: &str,
        buyer: &str,
        reuse: Option<&Did>,
    ) -> Result<TransferReceipt, LifecycleError> {
        if seller == buyer {
            return Err(LifecycleError::SameParty(seller.to_owned()));
        }
        let did = self.require_proposal(product, Proposal::P081)?.did.clone().expect("DID-per-product products have a DID");
        self.agent(buyer)?;
        self.atomic(&[seller, buyer], |net| {
            let now = net.tick();
            let mut from = net.take(seller)?;
            let mut to = net.take(buyer)?;
            let current = net.ledger.resolve_did(&did)?.clone();
            let signer = controlling_identity(&from, &current, product)?;

            let mut warnings = Vec::new();
            let anon = match reuse {
                None => net.fresh_identity()?,
                Some(d) => {
                    let id = to
                        .wallet
                        .identity(d)
                        .cloned()
                        .ok_or_else(|| LifecycleError::ForeignIdentity { agent: buyer.to_owned(), did: d.clone() })?;
                    let reused = net.products.values().filter(|p| &p.product != product).filter_map(|p| p.did.as_ref()).any(
                        |other| net.ledger.owner_history(other).is_ok_and(|h| h.contains(d)),
                    );
                    if reused {
                        warnings.push(format!("{d} already controls another product; the two are now linkable"));
                    }
                    id
                }
            };

            net.top_up(&from, &signer, now)?;
            let mut next = current.next_version();
            next.controller = anon.did.clone();
            next.verification_methods.retain(|vm| !from.wallet.holds(&vm.controller));
            next.delegations.clear();
            let tx = net.ledger.update_did(next, &signer, now)?;

            let moved = from.wallet.transfer_credentials(&mut to.wallet, &ProductId::Did(did.clone())).moved;
            to.wallet.add_identity(anon.clone());
            net.put(from);
            net.put(to);

            net.log(buyer, "identity.anonymous", Some(product), &[("did", anon.did.to_string())]);
            net.log_tx(seller, Some(product), &tx);
            net.log(seller, "wallet.transfer", Some(product), &[("to", buyer.to_owned()), ("count", moved.len().to_string())]);
            for w in &warnings {
                net.log(buyer, "warning.correlation", Some(product), &[("message", w.clone())]);
            }
            net.products.get_mut(product).expect("checked above").owners.push(buyer.to_owned());
            Ok(TransferReceipt { owner: anon.did, transactions: vec![tx], moved, warnings })
        })
    }

    /// The owner publishes its own key in the product document. The owner's
    /// account funds the anonymous DID when it cannot pay the update.
    /// Returns `None` when the key is already published.
    pub fn claim_control_p081(&mut self, product: &ProductRef, owner: &str) -> Result<Option<LedgerTransaction>, LifecycleError> {
        let did = self.require_proposal(product, Proposal::P081)?.did.clone().expect("DID-per-product products have a DID");
        self.atomic(&[owner], |net| {
            let now = net.tick();
            let agent = net.agent(owner)?.clone();
            let current = net.ledger.resolve_did(&did)?.clone();
            let signer = controlling_identity(&agent, &current, product)?;
            if current.has_key(&signer.keys.public_key()) {
                return Ok(None);
            }
            let mut next = current.next_version();
            next.add_key(signer.keys.key_id(), signer.did.clone(), signer.keys.public_key());
            net.top_up(&agent, &signer, now)?;
            let tx = net.ledger.update_did(next, &signer, now)?;
            net.log_tx(owner, Some(product), &tx);
            Ok(Some(tx))
        })
    }

    /// A repair: the owner grants `workshop` a one-time anchoring right, the
    /// workshop issues the repair credential into the owner's wallet and
    /// anchors its digest, which consumes the grant.
    pub fn record_event_p081(
        &mut self,
        product: &ProductRef,
        owner: &str,
        workshop: &str,
        claim: &ClaimSet,
    ) -> Result<(VerifiableCredential, LedgerTransaction), LifecycleError> {
        let did = self.require_proposal(product, Proposal::P081)?.did.clone().expect("DID-per-product products have a DID");
        self.require_listed(workshop)?;
        self.atomic(&[owner], |net| {
            let now = net.tick();
            let workshop_id = net.agent(workshop)?.identity.clone();
            let current = net.ledger.resolve_did(&did)?.clone();
            let holder = net.take(owner)?;
            let signer = controlling_identity(&holder, &current, product)?;

            let mut next = current.next_version();
            next.delegations.retain(|d| d.delegate != workshop_id.did);
            next.delegations.push(Delegation { delegate: workshop_id.did.clone(), capability: Capability::AnchorEvent });
            net.top_up(&holder, &signer, now)?;
            net.put(holder);
            let grant = net.ledger.update_did(next, &signer, now)?;
            net.log_tx(owner, Some(product), &grant);

            let target = ProductId::Did(did.clone());
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

    /// Deposits into an anonymous owner DID what it lacks for one document
    /// update. Agents' own DIDs are never topped up.
    fn top_up(&mut self, owner: &Agent, signer: &Identity, now: Timestamp) -> Result<(), LifecycleError> {
        if &signer.did == owner.did() {
            return Ok(());
        }
        let fee = self.ledger.fees().update_did;
        let balance = self.ledger.balance(&signer.did);
        if balance < fee {
            let tx = self.ledger.deposit(&signer.did, fee - balance.max(Decimal::ZERO), now)?;
            self.log_tx(&owner.name, None, &tx);
        }
        Ok(())
    }
}

/// The identity of `agent` that controls `doc`.
fn controlling_identity(agent: &Agent, doc: &DidDocument, product: &ProductRef) -> Result<Identity, LifecycleError> {
    agent
        .wallet
        .identity(&doc.controller)
        .cloned()
        .ok_or_else(|| LifecycleError::NotOwner { agent: agent.name.clone(), product: product.to_string() })
}
