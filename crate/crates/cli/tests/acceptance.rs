//! The nine acceptance criteria, each with its trial count and time budget.
//! Runs without the libtest harness so the PASS/FAIL table is always
//! printed; exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use dppkit_cli::args::{Cli, Format};
use dppkit_cli::scenario::{run_script, BUILTINS};
use dppkit_cli::session::Session;
use dppkit_core::costmodel::{cents, manufacturer_cost, owner_update_cost, per_product_ratio, reconcile};
use dppkit_core::credentials::{
    create_presentation, issue_credential, issue_transfer_credential, revoke, verify_transfer_chain, Nonce, SaleInfo,
    Subject, TransferCredential, Validity, VerifiableCredential,
};
use dppkit_core::dpp::{
    audit_completeness, resolve_dpp, ClaimSet, DppInput, Granularity, ResolveOptions, Role,
};
use dppkit_core::identity::{Did, DidDocument, Digest256, Gtin, Identity, ProductId, ProductRef, Timestamp, DEFAULT_METHOD};
use dppkit_core::lifecycle::{detect_fraud, Challenge, Network, Proposal};
use dppkit_core::vdr::{FeeSchedule, Ledger, StatusAssignment};
use dppkit_core::wallet::Wallet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn tokens(n: i64) -> Decimal {
    Decimal::new(n, 0)
}

const GTIN: &str = "4006381333931";

fn item(serial: &str) -> ProductRef {
    ProductRef::item(Gtin::parse(GTIN).unwrap(), serial).unwrap()
}

fn input(serial: &str) -> DppInput {
    DppInput {
        product: item(serial),
        granularity: Granularity::Item,
        claims: vec!["materials:shell:polymer=ABS".parse().unwrap(), "repairs:battery:state=new".parse().unwrap()],
        components: vec![],
        hybrid: false,
    }
}

fn mint(net: &mut Network, proposal: Proposal, maker: &str, serial: &str) -> ProductId {
    let receipt = match proposal {
        Proposal::P081 => net.mint_p081(maker, input(serial)),
        Proposal::P082 => net.mint_p082(maker, input(serial)),
    };
    receipt.unwrap().product
}

fn transfer(net: &mut Network, proposal: Proposal, p: &ProductRef, from: &str, to: &str) {
    match proposal {
        Proposal::P081 => drop(net.transfer_p081(p, from, to).unwrap()),
        Proposal::P082 => drop(net.transfer_p082(p, from, to, None).unwrap()),
    }
}

fn repair(net: &mut Network, proposal: Proposal, p: &ProductRef, owner: &str, workshop: &str, claim: &ClaimSet) {
    match proposal {
        Proposal::P081 => drop(net.record_event_p081(p, owner, workshop, claim).unwrap()),
        Proposal::P082 => drop(net.record_event_p082(p, owner, workshop, claim).unwrap()),
    }
}

fn identities(net: &Network, agent: &str) -> BTreeSet<Did> {
    net.agent(agent).unwrap().wallet.identities().map(|i| i.did.clone()).collect()
}

// ---- 1 ---------------------------------------------------------------------------

fn cost_command(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("dppkit").chain(args.iter().copied())).unwrap();
    dppkit_cli::run(&cli).unwrap().iter().map(|r| r.render(Format::Text)).collect()
}

fn cost_reproduction() -> Outcome {
    let fees = FeeSchedule::default();
    let eur = |proposal, x| manufacturer_cost(proposal, x, &fees).unwrap();
    check(cents(eur(Proposal::P081, 0).total_eur) == "2.00", || "x=0 is not 2.00 EUR".into())?;
    let one = eur(Proposal::P081, 1);
    check(cents(one.total_eur) == "5.00" && cents(one.per_product_eur) == "3.00", || format!("x=1: {one:?}"))?;
    let owner = owner_update_cost(1, &fees).unwrap();
    check(cents(owner.total_eur) == "1.00", || format!("owner update: {owner:?}"))?;
    check(per_product_ratio(&fees) == tokens(15), || format!("ratio {}", per_product_ratio(&fees)))?;

    // the same figures as the command prints them
    let x1 = cost_command(&["cost", "--proposal", "p081", "--products", "1"]);
    check(x1.contains("5.00 EUR") && x1.contains("3.00"), || x1.clone())?;
    let x0 = cost_command(&["cost", "--proposal", "p081", "--products", "0"]);
    check(x0.contains("2.00 EUR"), || x0.clone())?;
    let both = cost_command(&["cost", "--products", "1", "--owner-updates", "1"]);
    check(both.contains("ratio p081:p082 = 15"), || both.clone())?;
    check(both.lines().any(|l| l.starts_with("p081") && l.contains("owner") && l.contains("1.00 EUR")), || both.clone())?;
    Ok("2.00 / 5.00 (3.00 per product) / 1.00 EUR, ratio 15".into())
}

// ---- 2 ---------------------------------------------------------------------------

fn ledger_reconciliation() -> Outcome {
    let fees = FeeSchedule::default();
    let mut checked = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let proposal = if trial % 2 == 0 { Proposal::P081 } else { Proposal::P082 };
        let x: i64 = rng.gen_range(1..=50);
        let mut net = Network::new(trial, fees.clone()).unwrap();
        net.add_agent("maker", Role::Manufacturer, tokens(10_000), true).unwrap();
        net.add_agent("workshop", Role::Repairer, tokens(10_000), true).unwrap();
        net.add_agent("ana", Role::Customer, tokens(10_000), false).unwrap();
        let mut repairs = 0i64;
        for i in 0..x {
            let p = item(&format!("SN-{i}"));
            mint(&mut net, proposal, "maker", &format!("SN-{i}"));
            transfer(&mut net, proposal, &p, "maker", "ana");
            for r in 0..rng.gen_range(0..=5) {
                let claim: ClaimSet = format!("repairs:battery:event=r{r}").parse().unwrap();
                repair(&mut net, proposal, &p, "ana", "workshop", &claim);
                repairs += 1;
            }
        }
        let analytic = manufacturer_cost(proposal, x, &fees).unwrap();
        let rec = reconcile(&analytic, &net.ledger, &identities(&net, "maker")).unwrap();
        check(rec.passes(), || format!("trial {trial} ({proposal}, x={x}): manufacturer delta {}", rec.delta))?;
        if proposal == Proposal::P081 {
            // the owner's anonymous DIDs pay the grants; its own DID paid only its registration
            let mut anon = identities(&net, "ana");
            anon.remove(net.agent("ana").unwrap().did());
            let rec = reconcile(&owner_update_cost(repairs, &fees).unwrap(), &net.ledger, &anon).unwrap();
            check(rec.passes(), || format!("trial {trial} (x={x}, {repairs} repairs): owner delta {}", rec.delta))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} trials, zero delta"))
}

// ---- 3 ---------------------------------------------------------------------------

const CUSTOMERS: [&str; 4] = ["alice", "bob", "carol", "dave"];

fn ownership_soundness() -> Outcome {
    let mut attempts = 0usize;
    for trial in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let mut owners = vec!["maker"];
        for _ in 0..rng.gen_range(0..=10) {
            let next = *CUSTOMERS.iter().filter(|c| Some(*c) != owners.last()).collect::<Vec<_>>().choose(&mut rng).unwrap();
            owners.push(next);
        }
        let mut net = Network::new(trial, FeeSchedule::default()).unwrap();
        net.add_agent("maker", Role::Manufacturer, tokens(1000), true).unwrap();
        net.add_agent("workshop", Role::Repairer, tokens(1000), true).unwrap();
        for c in CUSTOMERS {
            net.add_agent(c, Role::Customer, tokens(1000), false).unwrap();
        }
        let ProductId::Did(did) = mint(&mut net, Proposal::P081, "maker", "SN-1") else {
            return Err("P081 minted no DID".into());
        };
        let p = item("SN-1");
        // (agent, identity) pairs that controlled the product at some point
        let mut controllers: Vec<(&str, Identity)> = vec![("maker", net.agent("maker").unwrap().identity.clone())];
        for pair in owners.windows(2) {
            let receipt = net.transfer_p081(&p, pair[0], pair[1]).unwrap();
            let identity = net.agent(pair[1]).unwrap().wallet.identity(&receipt.owner).unwrap().clone();
            controllers.push((pair[1], identity));

            let controller = net.ledger.resolve_did(&did).unwrap().controller.clone();
            let holders: Vec<&str> = net.agents().filter(|a| a.wallet.holds(&controller)).map(|a| a.name.as_str()).collect();
            check(holders == [pair[1]], || format!("trial {trial}: controller held by {holders:?}, expected {}", pair[1]))?;

            let before = net.ledger.len();
            for (agent, identity) in &controllers[..controllers.len() - 1] {
                let mut attempt = net.ledger.resolve_did(&did).unwrap().next_version();
                attempt.controller = identity.did.clone();
                let now = net.now();
                check(net.ledger.update_did(attempt, identity, now).is_err(), || {
                    format!("trial {trial}: {agent}'s old identity updated the document")
                })?;
                if *agent != pair[1] {
                    check(net.claim_control_p081(&p, agent).is_err(), || format!("trial {trial}: {agent} claimed control"))?;
                    let claim: ClaimSet = "repairs:battery:event=x".parse().unwrap();
                    check(net.record_event_p081(&p, agent, "workshop", &claim).is_err(), || {
                        format!("trial {trial}: {agent} granted a repair")
                    })?;
                }
                attempts += 1;
            }
            check(net.ledger.len() == before, || format!("trial {trial}: a rejected update reached the ledger"))?;
        }
        let history = net.owner_history(&p).unwrap();
        check(history == owners, || format!("trial {trial}: history {history:?}, sequence {owners:?}"))?;
    }
    Ok(format!("1000 trials, {attempts} prior-owner attempts rejected"))
}

// ---- 4 ---------------------------------------------------------------------------

const RETAILERS: [&str; 4] = ["r1", "r2", "r3", "r4"];

fn rechain(mut links: Vec<VerifiableCredential>) -> TransferCredential {
    if let Some(root) = links.first_mut() {
        root.claims.insert("previous".into(), Value::Null);
    }
    for i in 1..links.len() {
        let prev = serde_json::to_value(&links[i - 1]).unwrap();
        links[i].claims.insert("previous".into(), prev);
    }
    TransferCredential::from_credential(links.pop().unwrap()).unwrap()
}

fn resign(vc: &mut VerifiableCredential, signer: &Identity) {
    vc.issuer = signer.did.clone();
    vc.proof.verification_method = signer.key_ref();
    vc.proof.signature = signer.keys.sign(&vc.signing_bytes().unwrap());
}

/// A chain to judge, on the registry state it is judged against.
struct Case {
    name: String,
    chain: TransferCredential,
    ledger: Ledger,
}

/// Whether `chain` passes both the chain check and a fraud check in which
/// its head buyer presents it (an outsider when the buyer is nobody's).
fn accepted(net: &Network, chain: &TransferCredential, ledger: &Ledger, nonce: u8) -> bool {
    let now = net.now();
    let valid = verify_transfer_chain(chain, ledger, &net.commercial.trusted_manufacturers(), now).is_valid();
    let presenter = net.agent_holding(chain.buyer()).unwrap_or_else(|| net.agent("outsider").unwrap());
    let challenge = Challenge { audience: net.agent("alice").unwrap().did().clone(), nonce: Nonce(vec![nonce; 16]) };
    let vp = create_presentation(&presenter.identity, vec![chain.credential().clone()], &challenge.audience, challenge.nonce.clone(), now)
        .unwrap();
    let clean = !detect_fraud(&vp, &net.commercial, ledger, &challenge, now).fraudulent();
    valid || clean
}

fn chain_soundness() -> Outcome {
    let mut mutants = 0usize;
    let mut kinds = BTreeSet::new();
    for len in 1..=4usize {
        let mut net = Network::new(40 + len as u64, FeeSchedule::default()).unwrap();
        net.add_agent("maker", Role::Manufacturer, tokens(1000), true).unwrap();
        for r in RETAILERS.iter().chain(&["outsider"]) {
            net.add_agent(r, Role::Retailer, tokens(1000), true).unwrap();
        }
        net.add_agent("alice", Role::Customer, tokens(100), false).unwrap();
        let p = item("SN-1");
        net.mint_p082("maker", input("SN-1")).unwrap();
        let sellers: Vec<&str> = std::iter::once("maker").chain(RETAILERS).take(len + 1).collect();
        let mut heads = Vec::new();
        for pair in sellers.windows(2) {
            heads.push(net.transfer_p082(&p, pair[0], pair[1], Some(tokens(100))).unwrap());
        }
        let head = heads.last().unwrap().clone();
        check(accepted(&net, &head, &net.ledger, 0), || format!("honest chain of {len} rejected"))?;
        let honest = verify_transfer_chain(&head, &net.ledger, &net.commercial.trusted_manufacturers(), net.now());
        check(honest.is_valid(), || format!("honest chain of {len}: {:?}", honest.failures()))?;

        let links = head.links().to_vec();
        let id = |name: &str| net.agent(name).unwrap().identity.clone();
        let outsider = id("outsider");
        let seller_of = |k: usize| id(sellers[k]);
        let mut cases: Vec<Case> = Vec::new();
        let mut push = |name: String, chain: TransferCredential, ledger: &Ledger| cases.push(Case { name, chain, ledger: ledger.clone() });

        for k in 0..len {
            let mut l = links.clone();
            l[k].proof.signature.as_bytes_mut()[k % 64] ^= 0x01;
            push(format!("signature flip {k}"), rechain(l), &net.ledger);

            if k > 0 {
                // a registered stranger signs link k in place of the previous buyer
                let mut l = links.clone();
                resign(&mut l[k], &outsider);
                push(format!("linkage break {k} (foreign seller)"), rechain(l), &net.ledger);
                // link k - 1 names someone else as buyer, re-signed by its seller
                let mut l = links.clone();
                l[k - 1].subject = Subject::Did(outsider.did.clone());
                resign(&mut l[k - 1], &seller_of(k - 1));
                push(format!("linkage break {k} (redirected buyer)"), rechain(l), &net.ledger);
            }

            let mut l = links.clone();
            l[k].claims.insert("product".into(), json!({ "gtin": GTIN, "serial": "SN-2" }));
            resign(&mut l[k], &seller_of(k));
            push(format!("product swap {k}"), rechain(l), &net.ledger);

            if k + 1 < len {
                // a prefix whose head its holder has since sold on
                push(format!("revoked head {k}"), heads[k].clone(), &net.ledger);
            }

            // the seller of link k sells again, to the outsider, from the same predecessor
            let mut ledger = net.ledger.clone();
            let now = Timestamp(net.now().0 + 1);
            let prev = (k > 0).then(|| heads[k - 1].clone());
            let sale = SaleInfo { date: now, price: None };
            let double = issue_transfer_credential(&seller_of(k), &outsider.did, &p, prev.as_ref(), sale, &ledger, now)
                .map_err(|e| format!("double sale {k} of {len}: {e}"))?;
            let status = double.status().unwrap();
            let slot = StatusAssignment { list_id: status.list_id.clone(), index: status.index };
            ledger.anchor_with_status(p.clone(), double.credential().digest(), slot, &outsider, now).unwrap();
            push(format!("double sale {k}"), double, &ledger);
        }

        let mut root = links[0].clone();
        resign(&mut root, &outsider);
        push("untrusted root".into(), rechain(vec![root]), &net.ledger);

        // the current head, revoked by its holder
        let mut ledger = net.ledger.clone();
        let status = head.status().unwrap();
        let holder = id(sellers[len]);
        revoke(&holder, &status.list_id, status.index, &mut ledger, net.now()).map_err(|e| format!("revoking head: {e}"))?;
        push("revoked head (current)".into(), head.clone(), &ledger);

        for (n, case) in cases.iter().enumerate() {
            check(!accepted(&net, &case.chain, &case.ledger, n as u8 + 1), || format!("len {len}: '{}' accepted", case.name))?;
            kinds.insert(case.name.split(' ').take(2).collect::<Vec<_>>().join(" "));
            mutants += 1;
        }
    }
    Ok(format!("{mutants} mutants of {} kinds rejected, 4 honest chains accepted", kinds.len()))
}

// ---- 5 ---------------------------------------------------------------------------

fn fraud_scenarios() -> Outcome {
    let (_, _, script) = BUILTINS.iter().find(|(n, _, _)| *n == "fraud").unwrap();
    let run = run_script(script, None).map_err(|e| e.to_string())?;
    let checks: Vec<&Value> = run.reports.iter().filter(|r| r.kind == "fraud-check").map(|r| &r.record).collect();
    check(checks.len() == 3, || format!("{} fraud checks", checks.len()))?;
    let failed = |r: &Value, name: &str| r["failedChecks"].as_array().unwrap().iter().any(|f| f == name);
    check(checks[0]["fraudulent"] == false, || format!("honest retailer flagged: {}", checks[0]))?;
    check(checks[1]["fraudulent"] == true && failed(checks[1], "signer key verifies"), || {
        format!("unknown signer key not caught: {}", checks[1])
    })?;
    check(checks[2]["fraudulent"] == true && failed(checks[2], "chain subject continuity"), || {
        format!("subject mismatch not caught: {}", checks[2])
    })?;
    check(run.failures() == 0, || format!("{} scenario failure(s)", run.failures()))?;
    Ok("unknown key and subject mismatch flagged, honest retailer clean".into())
}

// ---- 6 ---------------------------------------------------------------------------

/// Digests a presented credential accounts for: every link of a chain.
fn covered(vc: &VerifiableCredential) -> Vec<Digest256> {
    match TransferCredential::from_credential(vc.clone()) {
        Ok(chain) => chain.links().iter().map(VerifiableCredential::digest).collect(),
        Err(_) => vec![vc.digest()],
    }
}

fn audit_completeness_trials() -> Outcome {
    let mut hidden_total = 0usize;
    for proposal in [Proposal::P081, Proposal::P082] {
        let mut net = Network::new(60, FeeSchedule::default()).unwrap();
        net.add_agent("maker", Role::Manufacturer, tokens(1000), true).unwrap();
        net.add_agent("workshop", Role::Repairer, tokens(1000), true).unwrap();
        net.add_agent("ana", Role::Customer, tokens(1000), false).unwrap();
        net.add_agent("ben", Role::Customer, tokens(1000), false).unwrap();
        let p = item("SN-1");
        let mut mint_input = input("SN-1");
        mint_input.claims.push("carbon:shell:kgCO2e=1.8".parse().unwrap());
        match proposal {
            Proposal::P081 => drop(net.mint_p081("maker", mint_input).unwrap()),
            Proposal::P082 => drop(net.mint_p082("maker", mint_input).unwrap()),
        }
        transfer(&mut net, proposal, &p, "maker", "ana");
        for r in 0..4 {
            repair(&mut net, proposal, &p, "ana", "workshop", &format!("repairs:battery:event=r{r}").parse().unwrap());
        }
        transfer(&mut net, proposal, &p, "ana", "ben");
        for r in 4..7 {
            repair(&mut net, proposal, &p, "ben", "workshop", &format!("repairs:hinge:event=r{r}").parse().unwrap());
        }
        let id = net.product(&p).unwrap().id();
        let wallet = &net.agent("ben").unwrap().wallet;
        let mut held: Vec<VerifiableCredential> = wallet.for_product(&id).into_iter().cloned().collect();
        if id != ProductId::Product(p.clone()) {
            held.extend(wallet.for_product(&ProductId::Product(p.clone())).into_iter().cloned());
        }
        // the manifest vouches for the originals; withholding it is a different failure
        let (manifest, pool): (Vec<_>, Vec<_>) =
            held.into_iter().partition(|vc| vc.claims.get("passport") == Some(&json!("manifest")));

        let full = audit_completeness(&id, &net.ledger, &[manifest.clone(), pool.clone()].concat());
        check(full.is_complete(), || format!("{proposal}: full presentation incomplete: {:?}", full.lines()))?;
        // independent oracle: what the registry lists, anchors plus the originals of record
        let mut registered: BTreeSet<Digest256> = net.ledger.anchors(&id).iter().map(|a| a.digest).collect();
        registered.extend(full.findings.iter().filter_map(|f| match f {
            dppkit_core::dpp::Finding::Matched { digest, .. } => Some(*digest),
            _ => None,
        }));

        let mut rng = ChaCha8Rng::seed_from_u64(600 + proposal as u64);
        for trial in 0..100 {
            let mask: Vec<bool> = pool.iter().map(|_| rng.gen_bool(0.4)).collect();
            let withheld: Vec<&VerifiableCredential> = pool.iter().zip(&mask).filter(|(_, m)| **m).map(|(v, _)| v).collect();
            let mut kept: Vec<VerifiableCredential> = manifest.clone();
            kept.extend(pool.iter().zip(&mask).filter(|(_, m)| !**m).map(|(v, _)| v.clone()));
            let still_shown: BTreeSet<Digest256> = kept.iter().flat_map(covered).collect();
            let expected: BTreeSet<Digest256> = withheld
                .iter()
                .flat_map(|vc| covered(vc))
                .filter(|d| registered.contains(d) && !still_shown.contains(d))
                .collect();
            let report = audit_completeness(&id, &net.ledger, &kept);
            check(report.concealed() == expected, || {
                format!("{proposal} trial {trial}: concealed {:?}, withheld {:?}", report.concealed(), expected)
            })?;
            check(report.unverifiable().is_empty(), || format!("{proposal} trial {trial}: unverifiable findings"))?;
            hidden_total += expected.len();
        }
    }
    Ok(format!("200 trials, {hidden_total} concealments matched exactly"))
}

// ---- 7 ---------------------------------------------------------------------------

fn resolution_determinism() -> Outcome {
    let mut nets = Vec::new();
    for proposal in [Proposal::P081, Proposal::P082] {
        let mut net = Network::new(70, FeeSchedule::default()).unwrap();
        net.add_agent("maker", Role::Manufacturer, tokens(1000), true).unwrap();
        net.add_agent("workshop", Role::Repairer, tokens(1000), true).unwrap();
        net.add_agent("ana", Role::Customer, tokens(1000), false).unwrap();
        let p = item("SN-1");
        mint(&mut net, proposal, "maker", "SN-1");
        transfer(&mut net, proposal, &p, "maker", "ana");
        // overlapping keys, so a wrong order would show
        for claim in [
            "repairs:battery:state=replaced",
            "materials:shell:polymer=PC",
            "repairs:battery:state=refurbished,cycles=0",
            "materials:battery:chemistry=NiMH",
            "repairs:battery:cycles=12",
            "materials:shell:polymer=ABS-recycled",
        ]
        {
            let claim: ClaimSet = claim.parse().unwrap();
            repair(&mut net, proposal, &p, "ana", "workshop", &claim);
        }
        nets.push((proposal, net, p));
    }

    for trial in 0..200u64 {
        let (proposal, net, p) = &nets[(trial % 2) as usize];
        let id = net.product(p).unwrap().id();
        let expected = net.resolve(&id, None).unwrap().to_canonical_bytes();
        let mut rng = ChaCha8Rng::seed_from_u64(700 + trial);
        let now = net.now();
        let owner = &net.agent("ana").unwrap().wallet;
        let mut creds: Vec<VerifiableCredential> = owner.credentials().cloned().collect();
        creds.shuffle(&mut rng);

        let wallets: Vec<Wallet> = match proposal {
            // subjects are the product DID, so only the controller's wallet takes them
            Proposal::P081 => {
                let mut w = owner.clone();
                for vc in &creds {
                    w.remove(&vc.id);
                }
                for vc in &creds {
                    w.store_credential(vc.clone(), &net.ledger, now).map_err(|e| e.to_string())?;
                }
                vec![w]
            }
            // product-reference subjects may sit in any wallet; transfer
            // credentials name the owner and stay with it
            Proposal::P082 => {
                let mut ws: Vec<Wallet> = ["ana", "maker", "workshop"]
                    .iter()
                    .map(|a| Wallet::new(net.agent(a).unwrap().identity.clone()))
                    .collect();
                for vc in &creds {
                    let k = if matches!(vc.subject, Subject::Did(_)) { 0 } else { rng.gen_range(0..ws.len()) };
                    ws[k].store_credential(vc.clone(), &net.ledger, now).map_err(|e| e.to_string())?;
                }
                ws.shuffle(&mut rng);
                ws
            }
        };
        let refs: Vec<&Wallet> = wallets.iter().collect();
        let view = resolve_dpp(&id, &net.ledger, &refs, ResolveOptions::at(now)).map_err(|e| e.to_string())?;
        check(view.to_canonical_bytes() == expected, || format!("{proposal} trial {trial}: view changed with arrival order"))?;
    }
    Ok("200 permutations, identical views".into())
}

// ---- 8 ---------------------------------------------------------------------------

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (name, _, script) in BUILTINS {
        let run = run_script(script, None).map_err(|e| e.to_string())?;
        let ledger = dir.path().join(format!("{name}.ledger"));
        run.session.save(&ledger).map_err(|e| e.to_string())?;
        let loaded = Session::load(&ledger).map_err(|e| format!("{name}: {e}"))?;
        let (a, b) = (&run.session.net, &loaded.net);
        check(a.transcript().digest() == b.transcript().digest(), || format!("{name}: transcript digest differs"))?;
        check(a.ledger.to_bytes().unwrap() == b.ledger.to_bytes().unwrap(), || format!("{name}: ledger bytes differ"))?;
        let file = std::fs::File::open(&ledger).map_err(|e| e.to_string())?;
        let replayed = Ledger::replay(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
        check(replayed.state_digest() == a.ledger.state_digest(), || format!("{name}: replayed state differs"))?;
        for product in a.products() {
            let id = product.id();
            let (va, vb) = (a.resolve(&id, None).unwrap(), b.resolve(&id, None).unwrap());
            check(va.to_canonical_bytes() == vb.to_canonical_bytes(), || format!("{name}: {} resolves differently", product.product))?;
        }
    }
    Ok(format!("{} scenarios: same ledger, views and transcript", BUILTINS.len()))
}

// ---- 9 ---------------------------------------------------------------------------

const CORPUS: usize = 70_000;

/// Datasheet-sized claim sets for one part: a substance table, disassembly
/// steps, a footprint per life-cycle stage, test reports.
fn component(rng: &mut ChaCha8Rng, serial: usize) -> Vec<ClaimSet> {
    let mut claims = Vec::new();
    let mut set = |category: &str, attrs: Vec<(String, Value)>| claims.push(ClaimSet::new(category, "part", attrs));
    let substances = (0..rng.gen_range(8..24))
        .map(|i| {
            let cas = format!("{}-{:02}-{}", rng.gen_range(50..99_999), rng.gen_range(0..99), rng.gen_range(0..9));
            let share = rng.gen_range(1..9_999) as f64 / 100.0;
            let entry = json!({
                "cas": cas, "massFraction": format!("{share:.2} %"),
                "recycledShare": format!("{} %", rng.gen_range(0..100)), "svhc": rng.gen_bool(0.05), "origin": "EU",
            });
            (format!("substance{i:02}"), entry)
        })
        .collect();
    set("materials", substances);
    let steps = (0..rng.gen_range(3..12))
        .map(|i| {
            let entry = json!({
                "action": "remove fastener and lift housing section",
                "tool": format!("torx T{}", rng.gen_range(5..30)), "seconds": rng.gen_range(5..240),
            });
            (format!("step{i:02}"), entry)
        })
        .collect();
    set("disassembly", steps);
    let stages = ["extraction", "processing", "manufacture", "transport", "use", "endOfLife"]
        .iter()
        .map(|s| {
            let entry = json!({
                "kgCO2e": format!("{:.3}", rng.gen_range(0.0..40.0)), "method": "ISO 14067:2018",
                "verifier": "accredited third party",
            });
            (s.to_string(), entry)
        })
        .collect();
    set("carbon", stages);
    let certs = (0..rng.gen_range(2..8))
        .map(|i| {
            let entry = json!({
                "standard": format!("EN {}-{}", rng.gen_range(1_000..70_000), rng.gen_range(1..5)),
                "body": "notified body 0123", "reportUrl": format!("https://reports.example/{serial}/{i}"),
            });
            (format!("cert{i}"), entry)
        })
        .collect();
    set("certifications", certs);
    set("repairs", vec![
        ("serviceManual".into(), json!(format!("https://service.example/{serial}"))),
        ("spareUntil".into(), json!("2035-12-31")),
    ]);
    set("ownership", vec![("site".into(), json!("plant 7, line 3")), ("batch".into(), json!(format!("B{}", serial / 100)))]);
    set("allergens", vec![("declared".into(), json!("none")), ("nickelRelease".into(), json!("< 0.5 ug/cm2/week"))]);
    claims
}

/// One signed passport credential per part, as a parts-level wallet would
/// hold them.
fn credential_size() -> Outcome {
    let maker = Identity::generate(&[9; 32], DEFAULT_METHOD).unwrap();
    let mut ledger = Ledger::new(FeeSchedule::default()).unwrap();
    ledger.deposit(&maker.did, tokens(100), Timestamp(0)).unwrap();
    ledger.create_did(DidDocument::for_identity(&maker), &maker, Timestamp(0)).unwrap();
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let chunk = CORPUS.div_ceil(threads);

    let (count, bytes) = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|t| {
                let (maker, ledger) = (&maker, &ledger);
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(900 + t as u64);
                    let (mut count, mut bytes) = (0usize, 0usize);
                    for serial in (t * chunk)..((t + 1) * chunk).min(CORPUS) {
                        let product = item(&format!("C-{serial:06}"));
                        let claims = BTreeMap::from([
                            ("passport".to_owned(), json!("component")),
                            ("product".to_owned(), serde_json::to_value(&product).unwrap()),
                            ("sections".to_owned(), serde_json::to_value(component(&mut rng, serial)).unwrap()),
                        ]);
                        let vc = issue_credential(maker, Subject::Product(product), claims, Validity::from(Timestamp(1)), None, ledger)
                            .unwrap();
                        count += 1;
                        bytes += vc.to_canonical_bytes().len();
                    }
                    (count, bytes)
                })
            })
            .collect();
        workers.into_iter().map(|w| w.join().unwrap()).fold((0, 0), |(c, b), (c2, b2)| (c + c2, b + b2))
    });
    check(count == CORPUS, || format!("{count} credentials generated"))?;
    let per = bytes as f64 / count as f64 / 1024.0;
    let detail = format!("{count} credentials, {:.1} MB, {per:.2} KB each (band 4-6 KB, tolerance 2-12 KB)", bytes as f64 / 1e6);
    check((2.0..=12.0).contains(&per), || detail.clone())?;
    Ok(detail)
}

// ---- harness -----------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "cost reproduction", budget: Some(Duration::from_secs(1)), run: cost_reproduction },
        Criterion { name: "ledger reconciliation", budget: Some(Duration::from_secs(10)), run: ledger_reconciliation },
        Criterion { name: "ownership soundness", budget: Some(Duration::from_secs(30)), run: ownership_soundness },
        Criterion { name: "chain soundness", budget: Some(Duration::from_secs(30)), run: chain_soundness },
        Criterion { name: "fraud scenarios", budget: None, run: fraud_scenarios },
        Criterion { name: "audit completeness", budget: None, run: audit_completeness_trials },
        Criterion { name: "resolution determinism", budget: None, run: resolution_determinism },
        Criterion { name: "replay determinism", budget: None, run: replay_determinism },
        Criterion { name: "credential size", budget: None, run: credential_size },
    ];
    let mut failed = 0;
    for (n, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let budget = c.budget.map_or(String::new(), |b| format!(" of {}s", b.as_secs()));
        let (verdict, detail) = match outcome {
            Ok(d) if over => ("FAIL", format!("{d}; over budget")),
            Ok(d) => ("PASS", d),
            Err(e) => ("FAIL", e),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("{verdict} {} {:<24} {:>8.2}s{budget}  {detail}", n + 1, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
