use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use serde_json::json;

use super::*;
use crate::credentials::testkit::{agent, World};
use crate::credentials::{issue_credential, Validity};
use crate::dpp::Taxonomy;

const CATEGORIES: [&str; 7] = ["materials", "disassembly", "repairs", "ownership", "certifications", "carbon", "allergens"];

fn product_credential(w: &World, category: &str, n: u32) -> VerifiableCredential {
    let claims = BTreeMap::from([
        ("category".to_owned(), json!(category)),
        ("component".to_owned(), json!(format!("part-{n}"))),
        ("attributes".to_owned(), json!({"n": n})),
    ]);
    issue_credential(&w.ids[0], Subject::Product(w.product.clone()), claims, Validity::from(Timestamp(1)), None, &w.ledger)
        .unwrap()
}

fn filled_wallet(w: &World, categories: &[&str]) -> Wallet {
    let mut wallet = Wallet::new(w.ids[0].clone());
    for (i, c) in categories.iter().enumerate() {
        assert!(wallet.store_credential(product_credential(w, c, i as u32), &w.ledger, Timestamp(2)).unwrap());
    }
    wallet
}

fn disclosed_categories(vp: &VerifiablePresentation) -> BTreeSet<String> {
    vp.credentials.iter().map(|vc| vc.category().unwrap().to_owned()).collect()
}

fn pid(w: &World) -> ProductId {
    ProductId::Product(w.product.clone())
}

#[test]
fn store_and_find() {
    let w = World::new(2);
    let mut wallet = Wallet::new(w.ids[0].clone());
    let vc = product_credential(&w, "materials", 0);
    assert!(wallet.store_credential(vc.clone(), &w.ledger, Timestamp(2)).unwrap());
    assert!(!wallet.store_credential(vc.clone(), &w.ledger, Timestamp(2)).unwrap());
    assert_eq!(wallet.len(), 1);
    assert_eq!(wallet.get(&vc.id), Some(&vc));
    assert_eq!(wallet.for_product(&pid(&w)), vec![&vc]);
    assert_eq!(wallet.by_category(&pid(&w), "materials"), vec![&vc]);
    assert!(wallet.by_category(&pid(&w), "repairs").is_empty());
}

#[test]
fn invalid_credential_is_rejected() {
    let w = World::new(2);
    let mut wallet = Wallet::new(w.ids[0].clone());
    let mut vc = product_credential(&w, "materials", 0);
    vc.claims.insert("component".into(), json!("swapped"));
    assert!(matches!(
        wallet.store_credential(vc, &w.ledger, Timestamp(2)),
        Err(WalletError::InvalidCredential { .. })
    ));
    assert!(wallet.is_empty());
}

#[test]
fn credential_about_someone_else_is_rejected() {
    let w = World::new(3);
    let mut wallet = Wallet::new(w.ids[1].clone());
    let about_other = issue_credential(
        &w.ids[0],
        Subject::Did(w.ids[2].did.clone()),
        BTreeMap::from([("category".to_owned(), json!("certifications"))]),
        Validity::from(Timestamp(1)),
        None,
        &w.ledger,
    )
    .unwrap();
    assert!(matches!(
        wallet.store_credential(about_other, &w.ledger, Timestamp(2)),
        Err(WalletError::ForeignSubject { .. })
    ));
}

#[test]
fn disclosure_by_role() {
    let w = World::new(3);
    let wallet = filled_wallet(&w, &CATEGORIES);
    let policy = AccessPolicy::example();
    let verifier = w.ids[2].did.clone();
    let disclose = |role| {
        wallet.selective_disclose(&pid(&w), role, &policy, &verifier, Nonce(vec![1]), &w.ledger, Timestamp(3))
    };
    let recycler = disclose(Role::Recycler).unwrap();
    assert_eq!(disclosed_categories(&recycler), BTreeSet::from(["disassembly".into(), "materials".into()]));
    assert!(disclosed_categories(&disclose(Role::Customer).unwrap()).contains("allergens"));
    assert!(!disclosed_categories(&disclose(Role::Customer).unwrap()).contains("materials"));
    let manufacturer = disclose(Role::Manufacturer).unwrap();
    assert_eq!(manufacturer.credentials.len(), CATEGORIES.len());
    let report = crate::credentials::verify_presentation(&manufacturer, &w.ledger, &verifier, &Nonce(vec![1]), Timestamp(3));
    assert!(report.is_valid());
}

#[test]
fn roles_without_matches_or_grants() {
    let w = World::new(2);
    let wallet = filled_wallet(&w, &["repairs"]);
    let verifier = w.ids[1].did.clone();
    let err = wallet
        .selective_disclose(&pid(&w), Role::Customer, &AccessPolicy::example(), &verifier, Nonce(vec![]), &w.ledger, Timestamp(3))
        .unwrap_err();
    assert!(matches!(err, WalletError::NothingToDisclose { .. }));
    let narrow = AccessPolicy::from_toml("[grants]\ncustomer = [\"allergens\"]\n", &Taxonomy::default()).unwrap();
    let err = wallet
        .selective_disclose(&pid(&w), Role::Recycler, &narrow, &verifier, Nonce(vec![]), &w.ledger, Timestamp(3))
        .unwrap_err();
    assert!(matches!(err, WalletError::Policy(DppError::UnknownRole(_))));
}

#[test]
fn transfer_moves_everything_about_the_product() {
    let w = World::new(3);
    let mut seller = filled_wallet(&w, &CATEGORIES[..5]);
    let unrelated = issue_credential(
        &w.ids[0],
        Subject::Did(w.ids[0].did.clone()),
        BTreeMap::from([("category".to_owned(), json!("certifications"))]),
        Validity::from(Timestamp(1)),
        None,
        &w.ledger,
    )
    .unwrap();
    seller.store_credential(unrelated.clone(), &w.ledger, Timestamp(2)).unwrap();
    let mut buyer = Wallet::new(w.ids[1].clone());
    let before = seller.len() + buyer.len();

    let outcome = seller.transfer_credentials(&mut buyer, &pid(&w));
    assert_eq!(outcome.moved.len(), 5);
    assert!(seller.for_product(&pid(&w)).is_empty());
    assert_eq!(buyer.for_product(&pid(&w)).len(), 5);
    assert_eq!(seller.len() + buyer.len(), before);
    assert!(seller.get(&unrelated.id).is_some());

    let err = seller
        .selective_disclose(
            &pid(&w),
            Role::Manufacturer,
            &AccessPolicy::example(),
            &w.ids[2].did,
            Nonce(vec![]),
            &w.ledger,
            Timestamp(3),
        )
        .unwrap_err();
    assert!(matches!(err, WalletError::NothingToDisclose { .. }));
    assert!(seller.transfer_credentials(&mut buyer, &pid(&w)).is_noop());
}

#[test]
fn reload_preserves_disclosure() {
    let w = World::new(3);
    let mut wallet = filled_wallet(&w, &CATEGORIES);
    wallet.add_identity(agent(40));
    let dir = tempfile::tempdir().unwrap();
    wallet.save(dir.path()).unwrap();
    let reloaded = Wallet::load(dir.path(), w.ids[0].clone(), [agent(40)]).unwrap();
    assert_eq!(reloaded.len(), wallet.len());
    let policy = AccessPolicy::example();
    for role in Role::ALL {
        let a = wallet.selective_disclose(&pid(&w), role, &policy, &w.ids[2].did, Nonce(vec![9]), &w.ledger, Timestamp(3));
        let b =
            reloaded.selective_disclose(&pid(&w), role, &policy, &w.ids[2].did, Nonce(vec![9]), &w.ledger, Timestamp(3));
        assert_eq!(a.ok(), b.ok(), "{role}");
    }
    // save is idempotent byte for byte
    let again = tempfile::tempdir().unwrap();
    reloaded.save(again.path()).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("index.json")).unwrap(),
        std::fs::read(again.path().join("index.json")).unwrap()
    );
    assert!(matches!(
        Wallet::load(dir.path(), w.ids[1].clone(), []),
        Err(WalletError::OwnerMismatch { .. })
    ));
}

#[test]
fn reload_rejects_edited_files() {
    let w = World::new(1);
    let wallet = filled_wallet(&w, &["materials"]);
    let dir = tempfile::tempdir().unwrap();
    wallet.save(dir.path()).unwrap();
    let file = std::fs::read_dir(dir.path().join("credentials")).unwrap().next().unwrap().unwrap().path();
    let mut text = std::fs::read_to_string(&file).unwrap();
    text.push(' ');
    std::fs::write(&file, text).unwrap();
    assert!(matches!(Wallet::load(dir.path(), w.ids[0].clone(), []), Err(WalletError::Corrupt(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Disclosed categories are exactly the role's grants intersected with
    /// the stored categories.
    #[test]
    fn disclosure_is_minimal(
        stored in prop::collection::vec(0usize..7, 0..10),
        grants in prop::collection::vec(prop::collection::btree_set(0usize..7, 0..7), 9),
        role_idx in 0usize..9,
    ) {
        let w = World::new(2);
        let cats: Vec<&str> = stored.iter().map(|i| CATEGORIES[*i]).collect();
        let wallet = filled_wallet(&w, &cats);
        let grant_map: BTreeMap<Role, BTreeSet<String>> = Role::ALL
            .iter()
            .zip(&grants)
            .map(|(r, g)| (*r, g.iter().map(|i| CATEGORIES[*i].to_owned()).collect()))
            .collect();
        let policy = AccessPolicy::new(grant_map.clone(), &Taxonomy::default()).unwrap();
        let role = Role::ALL[role_idx];
        let stored_set: BTreeSet<String> = cats.iter().map(|c| (*c).to_owned()).collect();
        let expected: BTreeSet<String> = grant_map[&role].intersection(&stored_set).cloned().collect();
        match wallet.selective_disclose(&pid(&w), role, &policy, &w.ids[1].did, Nonce(vec![]), &w.ledger, Timestamp(3)) {
            Ok(vp) => {
                prop_assert_eq!(disclosed_categories(&vp), expected.clone());
                let want = cats.iter().filter(|c| expected.contains(**c)).count();
                prop_assert_eq!(vp.credentials.len(), want);
            }
            Err(WalletError::NothingToDisclose { .. }) => prop_assert!(expected.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
