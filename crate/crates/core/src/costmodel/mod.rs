//! Registry cost of each design, analytically and as actually charged.
//!
//! A manufacturer pays one DID for itself plus a per-product term: under
//! the DID-per-product design a product DID and one controller update at
//! sale, under the credentials design a status list and one status-priced
//! anchor. Owners under the DID design pay one document update per event.
//! All arithmetic is exact decimal.

use std::collections::BTreeSet;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identity::{to_canonical, Did};
use crate::lifecycle::Proposal;
use crate::vdr::{FeeSchedule, Ledger, LedgerTransaction, TxPayload};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("count must be non-negative, got {0}")]
    NegativeCount(i64),
    #[error("ledger covers {found} products for {proposal}, the estimate assumes {expected}")]
    ScenarioMismatch { proposal: Proposal, expected: u64, found: u64 },
    #[error("ledger shows {payer} minting {found} products, the estimate is for {expected}")]
    ProposalMismatch { payer: Did, expected: Proposal, found: Proposal },
}

/// Who bears the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payer {
    Manufacturer,
    /// A product owner paying document updates.
    Owner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostReport {
    pub proposal: Proposal,
    pub payer: Payer,
    /// Products for a manufacturer, update events for an owner.
    pub product_count: u64,
    pub token_price_eur: Decimal,
    pub fixed_tokens: Decimal,
    pub per_product_tokens: Decimal,
    pub total_tokens: Decimal,
    /// Always `total_tokens * token_price_eur`.
    pub total_eur: Decimal,
    pub per_product_eur: Decimal,
}

impl CostReport {
    fn new(proposal: Proposal, payer: Payer, count: i64, fixed: Decimal, per_product: Decimal, fees: &FeeSchedule) -> Result<Self, CostError> {
        let x = u64::try_from(count).map_err(|_| CostError::NegativeCount(count))?;
        let total_tokens = fixed + per_product * Decimal::from(x);
        Ok(Self {
            proposal,
            payer,
            product_count: x,
            token_price_eur: fees.token_price_eur,
            fixed_tokens: fixed,
            per_product_tokens: per_product,
            total_tokens,
            total_eur: total_tokens * fees.token_price_eur,
            per_product_eur: per_product * fees.token_price_eur,
        })
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        to_canonical(self).expect("reports hold no floats")
    }
}

/// Formats an amount with exactly two decimals, e.g. `5.00`.
pub fn cents(amount: Decimal) -> String {
    format!("{:.2}", amount.round_dp(2))
}

/// Tokens a manufacturer pays for `x` products under `proposal`.
pub fn manufacturer_cost(proposal: Proposal, x: i64, fees: &FeeSchedule) -> Result<CostReport, CostError> {
    let per_product = match proposal {
        Proposal::P081 => fees.create_did + fees.update_did,
        Proposal::P082 => fees.status_list_create + fees.status_list_update,
    };
    CostReport::new(proposal, Payer::Manufacturer, x, fees.create_did, per_product, fees)
}

pub fn manufacturer_cost_p081(x: i64, fees: &FeeSchedule) -> Result<CostReport, CostError> {
    manufacturer_cost(Proposal::P081, x, fees)
}

pub fn manufacturer_cost_p082(x: i64, fees: &FeeSchedule) -> Result<CostReport, CostError> {
    manufacturer_cost(Proposal::P082, x, fees)
}

/// Tokens an owner pays for `events` document updates on a product DID.
pub fn owner_update_cost(events: i64, fees: &FeeSchedule) -> Result<CostReport, CostError> {
    CostReport::new(Proposal::P081, Payer::Owner, events, Decimal::ZERO, fees.update_did, fees)
}

/// How many times more a product costs the manufacturer under the DID
/// design than under the credentials design.
pub fn per_product_ratio(fees: &FeeSchedule) -> Decimal {
    let p081 = fees.create_did + fees.update_did;
    let p082 = fees.status_list_create + fees.status_list_update;
    p081 / p082
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Reconciliation {
    pub analytic: CostReport,
    pub payers: BTreeSet<Did>,
    pub ledger_tokens: Decimal,
    /// Charged minus predicted.
    pub delta: Decimal,
    pub transactions: usize,
}

impl Reconciliation {
    pub fn passes(&self) -> bool {
        self.delta.is_zero()
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        to_canonical(self).expect("reports hold no floats")
    }
}

/// Products a transaction registers, and under which design.
fn minted(tx: &LedgerTransaction) -> Option<Proposal> {
    match &tx.payload {
        TxPayload::CreateDid { document } if document.also_known_as.is_some() => Some(Proposal::P081),
        TxPayload::StatusListCreate { product: Some(_), .. } => Some(Proposal::P082),
        _ => None,
    }
}

/// Sums the fees `payers` were charged and compares them with `analytic`.
/// `payers` is every DID the paying agent uses, anonymous ones included.
/// For a manufacturer the ledger must show exactly `product_count`
/// products minted by it, all under the report's design.
pub fn reconcile(analytic: &CostReport, ledger: &Ledger, payers: &BTreeSet<Did>) -> Result<Reconciliation, CostError> {
    let paid: Vec<&LedgerTransaction> =
        ledger.transactions().iter().filter(|tx| tx.fee_payer.as_ref().is_some_and(|p| payers.contains(p))).collect();
    if analytic.payer == Payer::Manufacturer {
        let mut count = 0u64;
        for tx in &paid {
            match minted(tx) {
                Some(p) if p == analytic.proposal => count += 1,
                Some(p) => {
                    return Err(CostError::ProposalMismatch {
                        payer: tx.fee_payer.clone().expect("filtered on payer"),
                        expected: analytic.proposal,
                        found: p,
                    })
                }
                None => {}
            }
        }
        if count != analytic.product_count {
            return Err(CostError::ScenarioMismatch {
                proposal: analytic.proposal,
                expected: analytic.product_count,
                found: count,
            });
        }
    }
    let ledger_tokens: Decimal = paid.iter().map(|tx| tx.fee_tokens).sum();
    Ok(Reconciliation {
        analytic: analytic.clone(),
        payers: payers.clone(),
        ledger_tokens,
        delta: ledger_tokens - analytic.total_tokens,
        transactions: paid.len(),
    })
}

#[cfg(test)]
mod tests;
