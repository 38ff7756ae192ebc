use proptest::prelude::*;

use super::*;
use crate::dpp::{DppInput, Granularity, Role};
use crate::identity::{Gtin, ProductRef};
use crate::lifecycle::Network;

fn fees() -> FeeSchedule {
    FeeSchedule::default()
}

fn eur(s: &str) -> Decimal {
    s.parse().unwrap()
}

/// Integer oracle: tokens are counted in halves, euros in cents, at
/// 4 cents per token.
fn cents_oracle(half_tokens: i128) -> i128 {
    half_tokens * 4 / 2
}

#[test]
fn fixed_term_alone() {
    let r = manufacturer_cost_p081(0, &fees()).unwrap();
    assert_eq!(cents(r.total_eur), "2.00");
    assert_eq!(cents(manufacturer_cost_p082(0, &fees()).unwrap().total_eur), "2.00");
}

#[test]
fn one_product_under_each_design() {
    let r = manufacturer_cost_p081(1, &fees()).unwrap();
    assert_eq!(r.total_tokens, Decimal::new(125, 0));
    assert_eq!(cents(r.total_eur), "5.00");
    assert_eq!(cents(r.per_product_eur), "3.00");
    let r = manufacturer_cost_p082(1, &fees()).unwrap();
    assert_eq!(r.total_tokens, Decimal::new(55, 0));
    assert_eq!(cents(r.total_eur), "2.20");
}

#[test]
fn hundred_products() {
    assert_eq!(manufacturer_cost_p081(100, &fees()).unwrap().total_eur, eur("302.00"));
}

#[test]
fn owner_updates() {
    assert_eq!(cents(owner_update_cost(1, &fees()).unwrap().total_eur), "1.00");
    assert_eq!(owner_update_cost(0, &fees()).unwrap().total_tokens, Decimal::ZERO);
    assert_eq!(cents(owner_update_cost(3, &fees()).unwrap().total_eur), "3.00");
}

#[test]
fn ratio_is_fifteen() {
    assert_eq!(per_product_ratio(&fees()), Decimal::new(15, 0));
}

#[test]
fn negative_counts_are_rejected() {
    assert_eq!(manufacturer_cost_p081(-1, &fees()), Err(CostError::NegativeCount(-1)));
    assert_eq!(manufacturer_cost_p082(-5, &fees()), Err(CostError::NegativeCount(-5)));
    assert_eq!(owner_update_cost(-2, &fees()), Err(CostError::NegativeCount(-2)));
}

#[test]
fn price_is_a_parameter() {
    let mut f = fees();
    f.token_price_eur = eur("0.10");
    assert_eq!(manufacturer_cost_p081(1, &f).unwrap().total_eur, eur("12.5"));
}

proptest! {
    #[test]
    fn totals_are_exact_and_linear(x in 0i64..=1_000_000) {
        for proposal in [Proposal::P081, Proposal::P082] {
            let one = manufacturer_cost(proposal, x, &fees()).unwrap();
            let two = manufacturer_cost(proposal, 2 * x, &fees()).unwrap();
            prop_assert_eq!(two.total_tokens - one.total_tokens, one.per_product_tokens * Decimal::from(x));
            prop_assert_eq!(one.total_eur, one.total_tokens * one.token_price_eur);
            let per_half = match proposal { Proposal::P081 => 150, Proposal::P082 => 10 };
            let expected_cents = cents_oracle(100 + per_half * x as i128);
            prop_assert_eq!(one.total_eur * Decimal::ONE_HUNDRED, Decimal::from_i128_with_scale(expected_cents, 0));
        }
    }
}

// ---- reconciliation against a simulated registry ---------------------------------

fn item(n: u32) -> ProductRef {
    ProductRef::item(Gtin::parse("4006381333931").unwrap(), &format!("SN-{n}")).unwrap()
}

fn input(n: u32) -> DppInput {
    DppInput {
        product: item(n),
        granularity: Granularity::Item,
        claims: vec!["materials:body:alloy=Al".parse().unwrap()],
        components: vec![],
        hybrid: false,
    }
}

fn lifecycle(proposal: Proposal, x: u32) -> Network {
    let mut net = Network::new(3, fees()).unwrap();
    net.add_agent("maker", Role::Manufacturer, Decimal::new(100_000, 0), true).unwrap();
    net.add_agent("buyer", Role::Customer, Decimal::new(1_000, 0), false).unwrap();
    for n in 0..x {
        match proposal {
            Proposal::P081 => {
                net.mint_p081("maker", input(n)).unwrap();
                net.transfer_p081(&item(n), "maker", "buyer").unwrap();
            }
            Proposal::P082 => {
                net.mint_p082("maker", input(n)).unwrap();
                net.transfer_p082(&item(n), "maker", "buyer", None).unwrap();
            }
        }
    }
    net
}

fn maker(net: &Network) -> BTreeSet<Did> {
    BTreeSet::from([net.agent("maker").unwrap().did().clone()])
}

#[test]
fn ledger_matches_both_equations() {
    for (proposal, x) in [(Proposal::P081, 3), (Proposal::P082, 4), (Proposal::P081, 0)] {
        let net = lifecycle(proposal, x);
        let analytic = manufacturer_cost(proposal, x as i64, net.ledger.fees()).unwrap();
        let r = reconcile(&analytic, &net.ledger, &maker(&net)).unwrap();
        assert!(r.passes(), "{proposal} x={x}: delta {}", r.delta);
    }
}

#[test]
fn an_extra_update_shows_as_delta() {
    let mut net = lifecycle(Proposal::P081, 2);
    let id = net.agent("maker").unwrap().identity.clone();
    let doc = net.ledger.resolve_did(&id.did).unwrap().next_version();
    let now = net.now();
    net.ledger.update_did(doc, &id, now).unwrap();
    let analytic = manufacturer_cost_p081(2, net.ledger.fees()).unwrap();
    let r = reconcile(&analytic, &net.ledger, &maker(&net)).unwrap();
    assert!(!r.passes());
    assert_eq!(r.delta, Decimal::new(25, 0));
}

#[test]
fn mismatched_scenarios_are_rejected() {
    let net = lifecycle(Proposal::P082, 2);
    let wrong_count = manufacturer_cost_p082(3, net.ledger.fees()).unwrap();
    assert!(matches!(
        reconcile(&wrong_count, &net.ledger, &maker(&net)),
        Err(CostError::ScenarioMismatch { expected: 3, found: 2, .. })
    ));
    let wrong_design = manufacturer_cost_p081(2, net.ledger.fees()).unwrap();
    assert!(matches!(reconcile(&wrong_design, &net.ledger, &maker(&net)), Err(CostError::ProposalMismatch { .. })));
}

#[test]
fn owner_costs_reconcile_over_anonymous_dids() {
    let mut net = lifecycle(Proposal::P081, 1);
    net.add_agent("workshop", Role::Repairer, Decimal::new(1_000, 0), true).unwrap();
    net.claim_control_p081(&item(0), "buyer").unwrap();
    for _ in 0..2 {
        net.record_event_p081(&item(0), "buyer", "workshop", &"repairs:body:dent=fixed".parse().unwrap()).unwrap();
    }
    let buyer = net.agent("buyer").unwrap();
    let anon: BTreeSet<Did> = buyer.wallet.identities().map(|i| i.did.clone()).filter(|d| d != buyer.did()).collect();
    let r = reconcile(&owner_update_cost(3, net.ledger.fees()).unwrap(), &net.ledger, &anon).unwrap();
    assert!(r.passes(), "delta {}", r.delta);
}
