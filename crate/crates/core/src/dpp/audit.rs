use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PassportRecord;
use crate::credentials::{verify_credential, TransferCredential, VerifiableCredential};
use crate::identity::{Digest256, ProductId, Timestamp};
use crate::vdr::Ledger;

/// How an expected digest was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    /// Anchored on the registry for the product.
    Anchor,
    /// Listed as an original by the passport record.
    Record,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "finding")]
pub enum Finding {
    Matched { digest: Digest256, credential: String, via: MatchKind },
    /// Expected but not presented.
    Concealed { digest: Digest256, via: MatchKind },
    /// Presented but never anchored or recorded.
    Unverifiable { digest: Digest256, credential: String },
}

impl Finding {
    pub fn line(&self) -> String {
        match self {
            Finding::Matched { digest, credential, via } => format!("MATCHED {digest} {credential} ({via:?})"),
            Finding::Concealed { digest, via } => format!("CONCEALED {digest} ({via:?})"),
            Finding::Unverifiable { digest, credential } => format!("UNVERIFIABLE {digest} {credential}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub target: ProductId,
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn concealed(&self) -> BTreeSet<Digest256> {
        self.findings
            .iter()
            .filter_map(|f| match f {
                Finding::Concealed { digest, .. } => Some(*digest),
                _ => None,
            })
            .collect()
    }

    pub fn unverifiable(&self) -> BTreeSet<Digest256> {
        self.findings
            .iter()
            .filter_map(|f| match f {
                Finding::Unverifiable { digest, .. } => Some(*digest),
                _ => None,
            })
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.findings.iter().all(|f| matches!(f, Finding::Matched { .. }))
    }

    /// One finding per line.
    pub fn lines(&self) -> Vec<String> {
        self.findings.iter().map(Finding::line).collect()
    }
}

/// Compares what the registry says exists for `target` with what was
/// presented. Expected digests are the anchors for the target plus the
/// originals listed by its passport record; presented transfer credentials
/// count with every link they embed.
pub fn audit_completeness(target: &ProductId, registry: &Ledger, presented: &[VerifiableCredential]) -> AuditReport {
    let mut shown: BTreeMap<Digest256, String> = BTreeMap::new();
    for vc in presented {
        match TransferCredential::from_credential(vc.clone()) {
            Ok(chain) => {
                for link in chain.links() {
                    shown.insert(link.digest(), link.id.clone());
                }
            }
            Err(_) => {
                shown.insert(vc.digest(), vc.id.clone());
            }
        }
    }

    let mut expected: BTreeMap<Digest256, MatchKind> =
        registry.anchors(target).iter().map(|a| (a.digest, MatchKind::Anchor)).collect();
    let record = match target {
        ProductId::Did(did) => registry.resolve_did(did).ok().and_then(PassportRecord::from_document),
        // only a manifest that is itself anchored and verifies may vouch for originals
        ProductId::Product(_) => presented
            .iter()
            .filter(|vc| expected.contains_key(&vc.digest()))
            .filter(|vc| verify_credential(vc, registry, Timestamp(u64::MAX)).signature_valid)
            .find_map(|vc| PassportRecord::from_manifest(vc).filter(|r| r.manufacturer == vc.issuer)),
    };
    if let Some(record) = record {
        for digest in record.originals {
            expected.entry(digest).or_insert(MatchKind::Record);
        }
    }

    let mut findings = Vec::new();
    for (digest, via) in &expected {
        findings.push(match shown.get(digest) {
            Some(id) => Finding::Matched { digest: *digest, credential: id.clone(), via: *via },
            None => Finding::Concealed { digest: *digest, via: *via },
        });
    }
    for (digest, id) in &shown {
        if !expected.contains_key(digest) {
            findings.push(Finding::Unverifiable { digest: *digest, credential: id.clone() });
        }
    }
    findings.sort();
    AuditReport { target: target.clone(), findings }
}
