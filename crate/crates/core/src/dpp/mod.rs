//! Passport assembly: original passports, resolution of the current view,
//! completeness audits and role-filtered views.
//!
//! The original passport is summarized by a [`PassportRecord`]. A product
//! with its own DID carries the record in its document; a GTIN-only product
//! carries it in a manufacturer-signed manifest credential whose digest is
//! anchored for the product.

mod audit;
mod policy;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::credentials::{issue_credential, CredentialError, Subject, Validity, VerifiableCredential};
use crate::identity::{Did, Digest256, Identity, IdentityError, ProductId, ProductRef, Timestamp};
use crate::vdr::{Ledger, LedgerError};

pub use audit::{audit_completeness, AuditReport, Finding, MatchKind};
pub use policy::{AccessPolicy, Role, Taxonomy};
pub use resolve::{access_filter, resolve_dpp, ClaimValue, ComponentNode, DppView, ResolveOptions, UpdateRef};

/// Document property holding the passport record of a product DID.
pub const PASSPORT_PROPERTY: &str = "passport";

#[derive(Debug, Error)]
pub enum DppError {
    #[error("unknown role {0}")]
    UnknownRole(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no passport found for {0}")]
    NotFound(ProductId),
    #[error("{granularity} granularity does not fit product reference {product}")]
    GranularityMismatch { granularity: Granularity, product: ProductRef },
    #[error("component graph of {0} would contain a cycle")]
    CyclicComponents(ProductId),
    #[error("category {0} is not in the taxonomy")]
    UnknownCategory(String),
    #[error("hybrid passports keep their composition in a DID document; none given")]
    HybridNeedsDid,
    #[error("malformed claim set {0:?}: expected category:component:key=value[,key=value]")]
    MalformedClaim(String),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Model,
    Batch,
    Item,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Model => "model",
            Granularity::Batch => "batch",
            Granularity::Item => "item",
        })
    }
}

impl FromStr for Granularity {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(Granularity::Model),
            "batch" => Ok(Granularity::Batch),
            "item" => Ok(Granularity::Item),
            other => Err(DppError::Config(format!("unknown granularity {other}"))),
        }
    }
}

/// Where the original composition lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    /// In the product's DID document; no per-item credentials.
    Document,
    /// One credential per claim set.
    Credentials,
    /// Composition and component tree in the document, instance history as
    /// credentials.
    Hybrid,
}

/// Attributes of one component under one category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSet {
    pub category: String,
    pub component: String,
    pub attributes: BTreeMap<String, Value>,
}

impl ClaimSet {
    pub fn new(category: &str, component: &str, attributes: impl IntoIterator<Item = (String, Value)>) -> Self {
        Self { category: category.to_owned(), component: component.to_owned(), attributes: attributes.into_iter().collect() }
    }

    /// Reads the claim set out of a passport credential.
    pub fn from_claims(claims: &BTreeMap<String, Value>) -> Option<Self> {
        Some(Self {
            category: claims.get("category")?.as_str()?.to_owned(),
            component: claims.get("component")?.as_str()?.to_owned(),
            attributes: serde_json::from_value(claims.get("attributes")?.clone()).ok()?,
        })
    }

    fn to_claims(&self, passport: &str) -> BTreeMap<String, Value> {
        BTreeMap::from([
            ("category".to_owned(), json!(self.category)),
            ("component".to_owned(), json!(self.component)),
            ("attributes".to_owned(), json!(self.attributes)),
            ("passport".to_owned(), json!(passport)),
        ])
    }
}

/// Inverse of the `FromStr` form; non-string values print as JSON.
impl fmt::Display for ClaimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:", self.category, self.component)?;
        for (i, (k, v)) in self.attributes.iter().enumerate() {
            let sep = if i == 0 { "" } else { "," };
            match v {
                Value::String(s) => write!(f, "{sep}{k}={s}")?,
                other => write!(f, "{sep}{k}={other}")?,
            }
        }
        Ok(())
    }
}

/// `category:component:key=value[,key=value]`. Values are strings.
impl FromStr for ClaimSet {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DppError::MalformedClaim(s.to_owned());
        let mut parts = s.splitn(3, ':');
        let (category, component, attrs) = (parts.next().ok_or_else(bad)?, parts.next().ok_or_else(bad)?, parts.next().ok_or_else(bad)?);
        if category.is_empty() || component.is_empty() {
            return Err(bad());
        }
        let mut attributes = BTreeMap::new();
        for pair in attrs.split(',') {
            let (k, v) = pair.split_once('=').ok_or_else(bad)?;
            if k.is_empty() {
                return Err(bad());
            }
            attributes.insert(k.to_owned(), json!(v));
        }
        Ok(Self { category: category.to_owned(), component: component.to_owned(), attributes })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PassportRecord {
    pub product: ProductRef,
    pub manufacturer: Did,
    pub granularity: Granularity,
    pub mode: StorageMode,
    /// Composition kept in the record itself (document and hybrid modes).
    pub claims: Vec<ClaimSet>,
    pub components: Vec<ProductId>,
    /// Digests of the original credentials (credentials mode), sorted.
    pub originals: Vec<Digest256>,
}

impl PassportRecord {
    pub fn from_document(doc: &crate::identity::DidDocument) -> Option<Self> {
        serde_json::from_value(doc.properties.get(PASSPORT_PROPERTY)?.clone()).ok()
    }

    pub fn from_manifest(vc: &VerifiableCredential) -> Option<Self> {
        if vc.claim_str("passport") != Some("manifest") {
            return None;
        }
        serde_json::from_value(vc.claims.get("record")?.clone()).ok()
    }
}

#[derive(Debug, Clone)]
pub struct DppInput {
    pub product: ProductRef,
    pub granularity: Granularity,
    pub claims: Vec<ClaimSet>,
    pub components: Vec<ProductId>,
    /// Item passports only: keep composition in the document.
    pub hybrid: bool,
}

/// Everything a manufacturer produces for a new passport. Nothing has
/// touched the registry or any wallet yet.
#[derive(Debug, Clone)]
pub struct OriginalDpp {
    pub record: PassportRecord,
    pub originals: Vec<VerifiableCredential>,
    /// Present for GTIN-only products; its digest is to be anchored.
    pub manifest: Option<VerifiableCredential>,
}

impl OriginalDpp {
    /// Originals and manifest, everything the manufacturer's wallet keeps.
    pub fn credentials(&self) -> impl Iterator<Item = &VerifiableCredential> {
        self.originals.iter().chain(self.manifest.iter())
    }

    /// Properties for the product's DID document.
    pub fn document_properties(&self) -> BTreeMap<String, Value> {
        BTreeMap::from([(PASSPORT_PROPERTY.to_owned(), serde_json::to_value(&self.record).expect("records serialize"))])
    }
}

fn check_categories<'a>(claims: impl IntoIterator<Item = &'a ClaimSet>, taxonomy: &Taxonomy) -> Result<(), DppError> {
    for c in claims {
        if !taxonomy.contains(&c.category) {
            return Err(DppError::UnknownCategory(c.category.clone()));
        }
    }
    Ok(())
}

/// Components reachable from `start` through passport records held in
/// DID documents.
fn reaches(start: &ProductId, target: &BTreeSet<ProductId>, registry: &Ledger) -> bool {
    let mut stack = vec![start.clone()];
    let mut seen = BTreeSet::new();
    while let Some(node) = stack.pop() {
        if target.contains(&node) {
            return true;
        }
        if !seen.insert(node.clone()) {
            continue;
        }
        let did = match &node {
            ProductId::Did(did) => Some(did.clone()),
            ProductId::Product(p) => registry.find_by_product(p).first().map(|d| (*d).clone()),
        };
        if let Some(record) = did.and_then(|d| registry.resolve_did(&d).ok()).and_then(PassportRecord::from_document) {
            stack.extend(record.components);
        }
    }
    false
}

/// Builds the original passport. `product_did` is the DID the product will
/// be registered under, if any.
pub fn create_original_dpp(
    manufacturer: &Identity,
    input: DppInput,
    product_did: Option<&Did>,
    taxonomy: &Taxonomy,
    registry: &Ledger,
    now: Timestamp,
) -> Result<OriginalDpp, DppError> {
    if !registry.is_active(&manufacturer.did) {
        return Err(CredentialError::IssuerNotResolvable(manufacturer.did.clone()).into());
    }
    if (input.granularity == Granularity::Item) != input.product.is_item() {
        return Err(DppError::GranularityMismatch { granularity: input.granularity, product: input.product });
    }
    check_categories(&input.claims, taxonomy)?;
    let mut own_ids = BTreeSet::from([ProductId::Product(input.product.clone())]);
    if let Some(did) = product_did {
        own_ids.insert(ProductId::Did(did.clone()));
    }
    if input.components.iter().any(|c| reaches(c, &own_ids, registry)) {
        return Err(DppError::CyclicComponents(input.product.into()));
    }

    let mode = match (product_did, input.granularity, input.hybrid) {
        (None, _, true) => return Err(DppError::HybridNeedsDid),
        (Some(_), Granularity::Model | Granularity::Batch, _) => StorageMode::Document,
        (Some(_), Granularity::Item, true) => StorageMode::Hybrid,
        _ => StorageMode::Credentials,
    };
    let subject = match product_did {
        Some(did) => Subject::Did(did.clone()),
        None => Subject::Product(input.product.clone()),
    };
    let mut record = PassportRecord {
        product: input.product.clone(),
        manufacturer: manufacturer.did.clone(),
        granularity: input.granularity,
        mode,
        claims: Vec::new(),
        components: input.components,
        originals: Vec::new(),
    };
    let mut originals = Vec::new();
    if mode == StorageMode::Credentials {
        for claim in &input.claims {
            let vc = issue_credential(
                manufacturer,
                subject.clone(),
                claim.to_claims("original"),
                Validity::from(now),
                None,
                registry,
            )?;
            record.originals.push(vc.digest());
            originals.push(vc);
        }
        record.originals.sort();
    } else {
        record.claims = input.claims;
    }
    let manifest = match product_did {
        Some(_) => None,
        None => {
            let claims = BTreeMap::from([
                ("passport".to_owned(), json!("manifest")),
                ("product".to_owned(), serde_json::to_value(&input.product).expect("refs serialize")),
                ("record".to_owned(), serde_json::to_value(&record).expect("records serialize")),
            ]);
            Some(issue_credential(manufacturer, Subject::Product(input.product), claims, Validity::from(now), None, registry)?)
        }
    };
    Ok(OriginalDpp { record, originals, manifest })
}

/// An update to a product's passport, e.g. a repair. The subject is the
/// product DID or the product reference, whichever names the product.
pub fn issue_update_credential(
    issuer: &Identity,
    target: &ProductId,
    claim: &ClaimSet,
    taxonomy: &Taxonomy,
    registry: &Ledger,
    now: Timestamp,
) -> Result<VerifiableCredential, DppError> {
    check_categories([claim], taxonomy)?;
    let subject = match target {
        ProductId::Did(did) => Subject::Did(did.clone()),
        ProductId::Product(p) => Subject::Product(p.clone()),
    };
    Ok(issue_credential(issuer, subject, claim.to_claims("update"), Validity::from(now), None, registry)?)
}
