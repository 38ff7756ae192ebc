//! Ownership as a chain of transfer credentials. Each link is issued by the
//! seller to the buyer and embeds the link that made the seller owner, so
//! the head carries the whole provenance back to the manufacturer.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::vc::{issue_credential, verify_credential, StatusRef, Subject, Validity, VerifiableCredential};
use super::CredentialError;
use crate::identity::{Did, Identity, ProductId, ProductRef, Timestamp};
use crate::vdr::Ledger;

pub const TRANSFER_TYPE: &str = "transfer";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaleInfo {
    pub date: Timestamp,
    pub price: Option<Decimal>,
}

/// A structurally well-formed chain, root first. Whether it is *valid* is
/// decided by [`verify_transfer_chain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VerifiableCredential", into = "VerifiableCredential")]
pub struct TransferCredential {
    links: Vec<VerifiableCredential>,
}

impl TryFrom<VerifiableCredential> for TransferCredential {
    type Error = CredentialError;

    fn try_from(vc: VerifiableCredential) -> Result<Self, Self::Error> {
        Self::from_credential(vc)
    }
}

impl From<TransferCredential> for VerifiableCredential {
    fn from(tc: TransferCredential) -> Self {
        tc.into_credential()
    }
}

impl TransferCredential {
    pub fn from_credential(head: VerifiableCredential) -> Result<Self, CredentialError> {
        let mut links = Vec::new();
        let mut next = Some(head);
        while let Some(vc) = next.take() {
            if vc.claim_str("type") != Some(TRANSFER_TYPE) {
                return Err(CredentialError::NotATransferCredential(format!("{}: type is not {TRANSFER_TYPE}", vc.id)));
            }
            if !matches!(vc.subject, Subject::Did(_)) {
                return Err(CredentialError::NotATransferCredential(format!("{}: subject is not a DID", vc.id)));
            }
            if vc.product().is_none() {
                return Err(CredentialError::NotATransferCredential(format!("{}: no product claim", vc.id)));
            }
            next = match vc.claims.get("previous") {
                None | Some(Value::Null) => None,
                Some(prev) => Some(serde_json::from_value(prev.clone()).map_err(|e| {
                    CredentialError::NotATransferCredential(format!("{}: malformed previous link: {e}", vc.id))
                })?),
            };
            links.push(vc);
        }
        links.reverse();
        Ok(Self { links })
    }

    pub fn credential(&self) -> &VerifiableCredential {
        self.links.last().expect("a chain has at least one link")
    }

    pub fn into_credential(mut self) -> VerifiableCredential {
        self.links.pop().expect("a chain has at least one link")
    }

    /// Root first, head last.
    pub fn links(&self) -> &[VerifiableCredential] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn previous(&self) -> Option<TransferCredential> {
        (self.links.len() > 1).then(|| Self { links: self.links[..self.links.len() - 1].to_vec() })
    }

    pub fn product(&self) -> ProductRef {
        self.credential().product().expect("checked at construction")
    }

    pub fn seller(&self) -> &Did {
        &self.credential().issuer
    }

    pub fn buyer(&self) -> &Did {
        buyer_of(self.credential()).expect("checked at construction")
    }

    pub fn status(&self) -> Option<&StatusRef> {
        self.credential().status.as_ref()
    }

    pub fn sale_date(&self) -> Option<Timestamp> {
        self.credential().claims.get("saleDate").and_then(Value::as_u64).map(Timestamp)
    }
}

fn buyer_of(vc: &VerifiableCredential) -> Option<&Did> {
    match &vc.subject {
        Subject::Did(did) => Some(did),
        _ => None,
    }
}

/// Issues the next link of `product`'s chain. The new link takes the next
/// free slot of the product's status list; it is not registered until
/// someone anchors it with that slot.
pub fn issue_transfer_credential(
    seller: &Identity,
    buyer: &Did,
    product: &ProductRef,
    previous: Option<&TransferCredential>,
    sale: SaleInfo,
    registry: &Ledger,
    now: Timestamp,
) -> Result<TransferCredential, CredentialError> {
    let list = registry
        .product_status_list(product)
        .ok_or_else(|| CredentialError::NoManufacturerOfRecord(product.clone()))?;
    match previous {
        None if list.owner != seller.did => {
            return Err(CredentialError::ChainMismatch(format!(
                "{} is not the manufacturer of record and holds no previous link",
                seller.did
            )))
        }
        None => {}
        Some(prev) => {
            if prev.buyer() != &seller.did {
                return Err(CredentialError::ChainMismatch(format!(
                    "previous link names {} as buyer, not the seller {}",
                    prev.buyer(),
                    seller.did
                )));
            }
            if &prev.product() != product {
                return Err(CredentialError::ProductMismatch { expected: product.clone(), found: prev.product() });
            }
            if !verify_credential(prev.credential(), registry, now).signature_valid {
                return Err(CredentialError::ChainMismatch("previous link does not verify".into()));
            }
        }
    }

    let mut claims = BTreeMap::new();
    claims.insert("type".to_owned(), json!(TRANSFER_TYPE));
    claims.insert("category".to_owned(), json!("ownership"));
    claims.insert("product".to_owned(), serde_json::to_value(product).expect("product refs serialize"));
    claims.insert(
        "previous".to_owned(),
        previous.map_or(Value::Null, |p| serde_json::to_value(p.credential()).expect("credentials serialize")),
    );
    claims.insert("saleDate".to_owned(), json!(sale.date.0));
    if let Some(price) = sale.price {
        claims.insert("price".to_owned(), json!(price.to_string()));
    }
    let status = StatusRef { list_id: list.id.clone(), index: list.next_index() };
    let vc = issue_credential(seller, Subject::Did(buyer.clone()), claims, Validity::from(now), Some(status), registry)?;
    TransferCredential::from_credential(vc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkReport {
    pub credential_id: String,
    pub seller: Did,
    pub buyer: Did,
    /// Signature checks against a key of an active issuer.
    pub signature_valid: bool,
    /// The seller is the buyer of the previous link.
    pub linkage: bool,
    pub product_consistent: bool,
    /// The link carries a slot in the product's own status list.
    pub revocable: bool,
    /// The seller had not given the product away before this sale: its own
    /// link was not revoked earlier, or for the root, no other root was
    /// registered first.
    pub seller_held_at_sale: bool,
}

impl LinkReport {
    pub fn is_valid(&self) -> bool {
        self.signature_valid && self.linkage && self.product_consistent && self.revocable && self.seller_held_at_sale
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainReport {
    pub product: ProductRef,
    pub links: Vec<LinkReport>,
    pub root_issuer_trusted: bool,
    pub head_not_revoked: bool,
    /// The head is anchored for the product and its slot is held by its buyer.
    pub head_registered: bool,
}

impl ChainReport {
    pub fn is_valid(&self) -> bool {
        self.root_issuer_trusted
            && self.head_not_revoked
            && self.head_registered
            && self.links.iter().all(LinkReport::is_valid)
    }

    pub fn owner(&self) -> Option<&Did> {
        self.is_valid().then(|| &self.links.last().expect("a chain has at least one link").buyer)
    }

    /// Verdicts that failed, as `link N: name` or a chain-level name.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, l) in self.links.iter().enumerate() {
            for (ok, name) in [
                (l.signature_valid, "signature"),
                (l.linkage, "linkage"),
                (l.product_consistent, "product"),
                (l.revocable, "revocable"),
                (l.seller_held_at_sale, "seller held at sale"),
            ] {
                if !ok {
                    out.push(format!("link {i}: {name}"));
                }
            }
        }
        for (ok, name) in [
            (self.root_issuer_trusted, "root issuer trusted"),
            (self.head_not_revoked, "head not revoked"),
            (self.head_registered, "head registered"),
        ] {
            if !ok {
                out.push(name.to_owned());
            }
        }
        out
    }
}

pub fn verify_transfer_chain(
    head: &TransferCredential,
    registry: &Ledger,
    trusted_roots: &BTreeSet<Did>,
    now: Timestamp,
) -> ChainReport {
    let product = head.product();
    let product_list = registry.product_status_list(&product);
    let slot_list = |vc: &VerifiableCredential| {
        let status = vc.status.as_ref()?;
        let list = registry.status_list(&status.list_id)?;
        (list.product.as_ref() == Some(&product)).then_some((list, status.index))
    };

    let mut links = Vec::with_capacity(head.len());
    for (i, vc) in head.links().iter().enumerate() {
        let report = verify_credential(vc, registry, now);
        let buyer = buyer_of(vc).expect("checked at construction").clone();
        let linkage = match i {
            0 => vc.claims.get("previous").is_none_or(Value::is_null),
            _ => buyer_of(&head.links()[i - 1]) == Some(&vc.issuer),
        };
        let seller_held_at_sale = match i {
            0 => match (product_list, &vc.status) {
                (Some(list), Some(status)) => list.holders().next().is_none_or(|(first, _)| first == status.index),
                _ => false,
            },
            _ => match slot_list(&head.links()[i - 1]) {
                Some((list, index)) => list.revocation(index).is_none_or(|r| r.at >= vc.issued_at),
                None => false,
            },
        };
        links.push(LinkReport {
            credential_id: vc.id.clone(),
            seller: vc.issuer.clone(),
            buyer,
            signature_valid: report.signature_valid && report.issuer_resolvable,
            linkage,
            product_consistent: vc.product().as_ref() == Some(&product),
            revocable: slot_list(vc).is_some(),
            seller_held_at_sale,
        });
    }

    let head_vc = head.credential();
    let (head_not_revoked, head_registered) = match slot_list(head_vc) {
        Some((list, index)) => (
            !list.is_revoked_at(index, now),
            list.holder(index) == Some(head.buyer())
                && registry.is_anchored(&ProductId::Product(product.clone()), &head_vc.digest()),
        ),
        None => (false, false),
    };
    ChainReport {
        root_issuer_trusted: trusted_roots.contains(&head.links()[0].issuer),
        product,
        links,
        head_not_revoked,
        head_registered,
    }
}
