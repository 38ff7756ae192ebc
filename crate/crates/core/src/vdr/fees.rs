use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::LedgerError;

/// Token prices per registry operation.
///
/// Defaults are Cheqd mainnet figures as of June 2024: registering a DID
/// costs about 50 tokens, a document update 25, a deactivation 0.40 EUR
/// (10 tokens), status list creation and update 2.5 each, with one token
/// at 0.04 EUR. Token prices move, so all of these are parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeeSchedule {
    pub create_did: Decimal,
    pub update_did: Decimal,
    pub deactivate_did: Decimal,
    pub status_list_create: Decimal,
    pub status_list_update: Decimal,
    /// Anchoring against a product DID document; priced as a document update.
    pub anchor_hash: Decimal,
    pub token_price_eur: Decimal,
}

impl Default for FeeSchedule {
    fn default() -> Self {
        Self {
            create_did: Decimal::new(50, 0),
            update_did: Decimal::new(25, 0),
            deactivate_did: Decimal::new(10, 0),
            status_list_create: Decimal::new(25, 1),
            status_list_update: Decimal::new(25, 1),
            anchor_hash: Decimal::new(25, 0),
            token_price_eur: Decimal::new(4, 2),
        }
    }
}

impl FeeSchedule {
    pub fn validate(&self) -> Result<(), LedgerError> {
        let fees = [
            ("createDid", self.create_did),
            ("updateDid", self.update_did),
            ("deactivateDid", self.deactivate_did),
            ("statusListCreate", self.status_list_create),
            ("statusListUpdate", self.status_list_update),
            ("anchorHash", self.anchor_hash),
        ];
        for (name, fee) in fees {
            if fee.is_sign_negative() {
                return Err(LedgerError::InvalidFees(format!("{name} fee is negative")));
            }
        }
        if self.token_price_eur <= Decimal::ZERO {
            return Err(LedgerError::InvalidFees("token price must be positive".into()));
        }
        Ok(())
    }

    pub fn to_eur(&self, tokens: Decimal) -> Decimal {
        tokens * self.token_price_eur
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deactivation_fee_matches_eur_figure() {
        let fees = FeeSchedule::default();
        // 0.40 EUR at 0.04 EUR per token
        assert_eq!(Decimal::new(40, 2) / fees.token_price_eur, fees.deactivate_did);
        assert_eq!(fees.to_eur(fees.create_did), Decimal::new(2, 0));
        assert_eq!(fees.to_eur(fees.update_did), Decimal::new(1, 0));
        assert_eq!(fees.to_eur(fees.status_list_update), Decimal::new(1, 1));
    }

    #[test]
    fn rejects_bad_schedules() {
        let free = FeeSchedule { token_price_eur: Decimal::ZERO, ..FeeSchedule::default() };
        assert!(free.validate().is_err());
        let negative = FeeSchedule { update_did: Decimal::new(-1, 0), ..FeeSchedule::default() };
        assert!(negative.validate().is_err());
        assert!(FeeSchedule::default().validate().is_ok());
    }
}
