use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AccessPolicy, ClaimSet, DppError, Granularity, PassportRecord, Role, StorageMode};
use crate::credentials::{verify_credential, VerifiableCredential};
use crate::identity::{to_canonical, Did, ProductId, ProductRef, Timestamp};
use crate::vdr::Ledger;
use crate::wallet::{product_key, Wallet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolveOptions {
    /// Levels of components to expand below the root; `None` expands all.
    pub max_depth: Option<usize>,
    pub now: Timestamp,
}

impl ResolveOptions {
    pub fn at(now: Timestamp) -> Self {
        Self { max_depth: None, now }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimValue {
    pub category: String,
    pub value: Value,
    /// `record` for values from the passport record, else a credential id.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpdateRef {
    pub id: String,
    pub category: String,
    pub issued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "node")]
pub enum ComponentNode {
    Resolved { view: Box<DppView> },
    /// Not expanded: the depth limit was reached.
    Truncated { product: ProductId },
    Broken { product: ProductId, reason: String },
    /// Already on the path from the root.
    Cycle { product: ProductId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DppView {
    pub product: ProductId,
    pub product_ref: ProductRef,
    pub manufacturer: Did,
    pub granularity: Granularity,
    pub mode: StorageMode,
    /// component -> attribute -> current value
    pub components: BTreeMap<String, BTreeMap<String, ClaimValue>>,
    /// Applied updates in application order.
    pub updates: Vec<UpdateRef>,
    pub children: Vec<ComponentNode>,
    pub diagnostics: Vec<String>,
}

impl DppView {
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        to_canonical(self).expect("views hold no floats")
    }

    pub fn value(&self, component: &str, key: &str) -> Option<&Value> {
        self.components.get(component)?.get(key).map(|c| &c.value)
    }

    /// Every (component, key, category) visible in this view and below.
    pub fn claim_keys(&self) -> BTreeSet<(String, String, String)> {
        let mut out: BTreeSet<_> = self
            .components
            .iter()
            .flat_map(|(comp, attrs)| attrs.iter().map(move |(k, v)| (comp.clone(), k.clone(), v.category.clone())))
            .collect();
        for child in &self.children {
            if let ComponentNode::Resolved { view } = child {
                out.extend(view.claim_keys().into_iter().map(|(c, k, cat)| (format!("{}/{c}", view.product), k, cat)));
            }
        }
        out
    }
}

/// Finds the passport record for `target` and the id it is canonically
/// addressed by.
fn locate(
    target: &ProductId,
    registry: &Ledger,
    wallets: &[&Wallet],
    now: Timestamp,
) -> Result<(ProductId, PassportRecord), DppError> {
    let did = match target {
        ProductId::Did(did) => Some(did.clone()),
        ProductId::Product(p) => registry.find_by_product(p).first().map(|d| (*d).clone()),
    };
    if let Some(did) = did {
        let record = registry
            .resolve_did(&did)
            .ok()
            .and_then(PassportRecord::from_document)
            .ok_or_else(|| DppError::NotFound(target.clone()))?;
        return Ok((ProductId::Did(did), record));
    }
    let ProductId::Product(product) = target else { unreachable!("DID targets handled above") };
    let anchored_for = ProductId::Product(product.clone());
    let mut manifests: Vec<(&VerifiableCredential, PassportRecord)> = wallets
        .iter()
        .flat_map(|w| w.by_category(&anchored_for, ""))
        .filter_map(|vc| PassportRecord::from_manifest(vc).map(|r| (vc, r)))
        .filter(|(vc, r)| {
            let report = verify_credential(vc, registry, now);
            report.signature_valid
                && vc.issuer == r.manufacturer
                && &r.product == product
                && registry.is_anchored(&anchored_for, &vc.digest())
        })
        .collect();
    manifests.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    manifests.into_iter().next().map(|(_, r)| (anchored_for, r)).ok_or_else(|| DppError::NotFound(target.clone()))
}

/// The current passport: the original overlaid with every valid update held
/// in `wallets`, in (issuance time, credential id) order. A later update
/// replaces earlier values at the same component and attribute.
pub fn resolve_dpp(
    target: &ProductId,
    registry: &Ledger,
    wallets: &[&Wallet],
    options: ResolveOptions,
) -> Result<DppView, DppError> {
    resolve_at(target, registry, wallets, options, 0, &mut Vec::new())
}

fn resolve_at(
    target: &ProductId,
    registry: &Ledger,
    wallets: &[&Wallet],
    options: ResolveOptions,
    depth: usize,
    path: &mut Vec<ProductId>,
) -> Result<DppView, DppError> {
    let (id, record) = locate(target, registry, wallets, options.now)?;
    if path.contains(&id) {
        return Err(DppError::CyclicComponents(id));
    }
    let mut diagnostics = BTreeSet::new();
    let mut components: BTreeMap<String, BTreeMap<String, ClaimValue>> = BTreeMap::new();
    let mut apply = |claim: &ClaimSet, source: &str| {
        let slot = components.entry(claim.component.clone()).or_default();
        for (k, v) in &claim.attributes {
            slot.insert(
                k.clone(),
                ClaimValue { category: claim.category.clone(), value: v.clone(), source: source.to_owned() },
            );
        }
    };

    for claim in &record.claims {
        apply(claim, "record");
    }

    let held: BTreeMap<&str, &VerifiableCredential> =
        wallets.iter().flat_map(|w| w.credentials()).map(|vc| (vc.id.as_str(), vc)).collect();
    let by_digest: BTreeMap<_, _> = held.values().map(|vc| (vc.digest(), *vc)).collect();
    let mut originals: Vec<&VerifiableCredential> = Vec::new();
    for digest in &record.originals {
        match by_digest.get(digest) {
            Some(vc) => originals.push(vc),
            None => {
                diagnostics.insert(format!("original credential {digest} is not held by any wallet"));
            }
        }
    }
    originals.sort_by(|a, b| a.id.cmp(&b.id));
    for vc in originals {
        match ClaimSet::from_claims(&vc.claims) {
            Some(claim) if vc.issuer == record.manufacturer => apply(&claim, &vc.id),
            _ => {
                diagnostics.insert(format!("original credential {} is malformed", vc.id));
            }
        }
    }

    let mut updates: Vec<&VerifiableCredential> = held
        .values()
        .copied()
        .filter(|vc| vc.claim_str("passport") == Some("update") && product_key(vc).as_ref() == Some(&id))
        .filter(|vc| {
            let report = verify_credential(vc, registry, options.now);
            let ok = report.signature_valid && report.issuer_resolvable;
            if !ok {
                diagnostics.insert(format!("update {} does not verify and was skipped", vc.id));
            }
            ok
        })
        .collect();
    updates.sort_by(|a, b| (a.issued_at, &a.id).cmp(&(b.issued_at, &b.id)));
    let mut applied = Vec::new();
    for vc in updates {
        match ClaimSet::from_claims(&vc.claims) {
            Some(claim) => {
                apply(&claim, &vc.id);
                applied.push(UpdateRef { id: vc.id.clone(), category: claim.category, issued_at: vc.issued_at });
            }
            None => {
                diagnostics.insert(format!("update {} carries no claim set", vc.id));
            }
        }
    }

    path.push(id.clone());
    let mut children = Vec::new();
    for child in &record.components {
        let node = if path.contains(child) {
            ComponentNode::Cycle { product: child.clone() }
        } else if options.max_depth.is_some_and(|max| depth >= max) {
            ComponentNode::Truncated { product: child.clone() }
        } else {
            match resolve_at(child, registry, wallets, options, depth + 1, path) {
                Ok(view) => ComponentNode::Resolved { view: Box::new(view) },
                Err(DppError::CyclicComponents(_)) => ComponentNode::Cycle { product: child.clone() },
                Err(e) => {
                    diagnostics.insert(format!("component {child} is broken: {e}"));
                    ComponentNode::Broken { product: child.clone(), reason: e.to_string() }
                }
            }
        };
        children.push(node);
    }
    path.pop();

    Ok(DppView {
        product: id,
        product_ref: record.product,
        manufacturer: record.manufacturer,
        granularity: record.granularity,
        mode: record.mode,
        components,
        updates: applied,
        children,
        diagnostics: diagnostics.into_iter().collect(),
    })
}

/// Drops every claim outside the role's grants. Components, children and
/// diagnostics are kept so the shape of the product stays visible.
pub fn access_filter(view: &DppView, role: Role, policy: &AccessPolicy) -> Result<DppView, DppError> {
    let granted = policy.grants(role)?;
    Ok(filter_with(view, granted))
}

fn filter_with(view: &DppView, granted: &BTreeSet<String>) -> DppView {
    let mut out = view.clone();
    for attrs in out.components.values_mut() {
        attrs.retain(|_, v| granted.contains(&v.category));
    }
    out.updates.retain(|u| granted.contains(&u.category));
    for child in &mut out.children {
        if let ComponentNode::Resolved { view } = child {
            **view = filter_with(view, granted);
        }
    }
    out
}
