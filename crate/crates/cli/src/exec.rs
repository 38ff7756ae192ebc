//! Command execution against a [`Session`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use dppkit_core::costmodel::{
    manufacturer_cost, owner_update_cost, per_product_ratio, reconcile, CostReport, Reconciliation,
};
use dppkit_core::credentials::{
    create_presentation, verify_transfer_chain, Nonce, TransferCredential, VerifiableCredential,
};
use dppkit_core::dpp::{access_filter, audit_completeness, AccessPolicy, AuditReport, DppInput, Granularity};
use dppkit_core::identity::{sha256, Did, Digest256, Identity, ProductId, ProductRef};
use dppkit_core::lifecycle::{detect_fraud, Challenge, LifecycleError, Network, Proposal};
use dppkit_core::vdr::{FeeSchedule, LedgerTransaction};
use rust_decimal::Decimal;
use serde_json::{json, Value};

use crate::args::{
    AgentCmd, AuditArgs, Command, CostArgs, Expectation, ExportArgs, FraudArgs, HolderArgs, ProductCmd, ResolveArgs,
};
use crate::error::CliError;
use crate::render::{cost_rows, truncated, view_lines, Report};
use crate::session::{mutation_line, Session};

/// Applies a mutating command and journals it.
pub fn mutate(session: &mut Session, cmd: &Command) -> Result<Report, CliError> {
    let line = mutation_line(cmd).ok_or_else(|| CliError::Invalid("not a mutating command".into()))?;
    let before = session.net.ledger.len();
    let net = &mut session.net;
    let report = match cmd {
        Command::Agent(AgentCmd::Create { name, role, funds, listed }) => {
            let did = net.add_agent(name, *role, *funds, *listed)?;
            Report::new("agent.create", json!({ "name": name, "did": did, "role": role, "listed": listed }))
                .line(format!("agent {name} ({role}{}) is {did}", if *listed { ", listed" } else { "" }))
        }
        Command::Agent(AgentCmd::Fund { name, amount }) => {
            net.fund(name, *amount)?;
            let did = net.agent(name)?.did().clone();
            let balance = net.ledger.balance(&did);
            Report::new("agent.fund", json!({ "name": name, "amount": amount, "balance": balance }))
                .line(format!("{name} balance {} tokens", balance.normalize()))
        }
        Command::Product(ProductCmd::Mint(m)) => {
            let granularity = m.granularity.unwrap_or(if m.product.is_item() { Granularity::Item } else { Granularity::Model });
            let input = DppInput {
                product: m.product.clone(),
                granularity,
                claims: m.claims.clone(),
                components: m.components.clone(),
                hybrid: m.hybrid,
            };
            let receipt = match m.proposal {
                Proposal::P081 => net.mint_p081(&m.by, input)?,
                Proposal::P082 => net.mint_p082(&m.by, input)?,
            };
            let originals: Vec<&str> = receipt.dpp.originals.iter().map(|vc| vc.id.as_str()).collect();
            let mode = serde_json::to_value(receipt.dpp.record.mode).expect("modes serialize");
            Report::new(
                "product.mint",
                json!({
                    "product": receipt.product,
                    "productRef": m.product,
                    "proposal": m.proposal,
                    "mode": mode,
                    "originals": originals,
                    "manifest": receipt.dpp.manifest.as_ref().map(|vc| vc.id.clone()),
                }),
            )
            .line(format!("minted {} as {} under {}", m.product, receipt.product, m.proposal))
            .line(format!(
                "{} passport, {} storage, {} original credential(s)",
                granularity,
                mode.as_str().unwrap_or_default(),
                originals.len()
            ))
        }
        Command::Transfer(t) => {
            let proposal = net.product(&t.product)?.proposal;
            match proposal {
                Proposal::P081 => {
                    if t.price.is_some() {
                        return Err(CliError::Invalid("--price is recorded only by p082 transfer credentials".into()));
                    }
                    let receipt = match &t.reuse {
                        Some(did) => net.transfer_p081_reusing(&t.product, &t.from, &t.to, did)?,
                        None => net.transfer_p081(&t.product, &t.from, &t.to)?,
                    };
                    Report::new(
                        "transfer",
                        json!({
                            "product": t.product, "proposal": proposal, "from": t.from, "to": t.to,
                            "controller": receipt.owner, "moved": receipt.moved, "warnings": receipt.warnings,
                        }),
                    )
                    .line(format!("{} now controlled by {} ({})", t.product, receipt.owner, t.to))
                    .line(format!("{} credential(s) moved to {}", receipt.moved.len(), t.to))
                    .lines(receipt.warnings.iter().map(|w| format!("warning: {w}")))
                }
                Proposal::P082 => {
                    if t.reuse.is_some() {
                        return Err(CliError::Invalid("--reuse applies to product DIDs, which p082 has none of".into()));
                    }
                    let tc = net.transfer_p082(&t.product, &t.from, &t.to, t.price)?;
                    Report::new(
                        "transfer",
                        json!({
                            "product": t.product, "proposal": proposal, "from": t.from, "to": t.to,
                            "credential": tc.credential().id, "links": tc.len(),
                        }),
                    )
                    .line(format!("{} sold by {} to {}: transfer credential {}", t.product, t.from, t.to, tc.credential().id))
                    .line(format!("chain length {}", tc.len()))
                }
            }
        }
        Command::ClaimControl(o) => {
            let tx = net.claim_control_p081(&o.product, &o.owner)?;
            Report::new("claim-control", json!({ "product": o.product, "owner": o.owner, "changed": tx.is_some() })).line(
                match tx {
                    Some(_) => format!("{} published its key in the document of {}", o.owner, o.product),
                    None => format!("{}'s key is already in the document of {}", o.owner, o.product),
                },
            )
        }
        Command::Repair(r) => {
            let (vc, anchor) = match net.product(&r.product)?.proposal {
                Proposal::P081 => net.record_event_p081(&r.product, &r.owner, &r.workshop, &r.claim)?,
                Proposal::P082 => net.record_event_p082(&r.product, &r.owner, &r.workshop, &r.claim)?,
            };
            Report::new(
                "repair",
                json!({ "product": r.product, "owner": r.owner, "workshop": r.workshop, "credential": vc.id, "digest": vc.digest(), "anchorSeq": anchor.seq }),
            )
            .line(format!("{} recorded {} on {}: credential {}", r.workshop, r.claim.category, r.product, vc.id))
            .line(format!("anchored digest {}", vc.digest()))
        }
        _ => unreachable!("mutation_line accepted it"),
    };
    session.record(line);
    let txs = &session.net.ledger.transactions()[before..];
    Ok(with_fees(report, txs, session.net.ledger.fees()))
}

fn with_fees(mut report: Report, txs: &[LedgerTransaction], fees: &FeeSchedule) -> Report {
    let tokens: Decimal = txs.iter().map(|t| t.fee_tokens).sum();
    if let Value::Object(map) = &mut report.record {
        map.insert("feeTokens".into(), json!(tokens));
        map.insert("transactions".into(), json!(txs.iter().map(|t| t.seq).collect::<Vec<_>>()));
    }
    if !tokens.is_zero() {
        report.lines.push(format!(
            "fees {} tokens ({} EUR) over {} transaction(s)",
            tokens.normalize(),
            dppkit_core::costmodel::cents(fees.to_eur(tokens)),
            txs.len()
        ));
    }
    report
}

/// Runs any command that works on a loaded session.
pub fn execute(session: &mut Session, cmd: &Command) -> Result<Report, CliError> {
    if mutation_line(cmd).is_some() {
        return mutate(session, cmd);
    }
    let net = &session.net;
    match cmd {
        Command::Agent(AgentCmd::List) => Ok(agent_list(net)),
        Command::Resolve(r) => resolve(net, r),
        Command::Audit(a) => audit(net, a).map(|(r, _)| r),
        Command::VerifyChain(h) => verify_chain(net, h),
        Command::FraudCheck(f) => fraud_check(net, f),
        Command::Cost(c) => cost(Some(net), c),
        Command::Export(e) => export(net, e),
        Command::Ledger(_) | Command::Scenario(_) => {
            Err(CliError::Invalid("ledger and scenario commands do not run inside a session".into()))
        }
        _ => unreachable!("mutating commands handled above"),
    }
}

fn agent_list(net: &Network) -> Report {
    let mut rows = vec![["name", "role", "listed", "balance", "identities", "did"].map(str::to_owned).to_vec()];
    let mut records = Vec::new();
    for a in net.agents() {
        let listed = net.commercial.contains(a.did());
        let balance = net.ledger.balance(a.did());
        let identities = a.wallet.identities().count();
        rows.push(vec![
            a.name.clone(),
            a.role.to_string(),
            if listed { "yes" } else { "no" }.to_owned(),
            balance.normalize().to_string(),
            identities.to_string(),
            a.did().to_string(),
        ]);
        records.push(json!({ "name": a.name, "role": a.role, "did": a.did(), "listed": listed, "balance": balance, "identities": identities }));
    }
    Report::new("agent.list", records).lines(crate::render::table(&rows))
}

fn resolve(net: &Network, r: &ResolveArgs) -> Result<Report, CliError> {
    let view = net.resolve(&r.target, r.depth)?;
    let view = match r.role {
        None => view,
        Some(role) => {
            let policy = match &r.policy {
                None => AccessPolicy::example(),
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
                    AccessPolicy::from_toml(&text, &net.taxonomy)?
                }
            };
            access_filter(&view, role, &policy)?
        }
    };
    let hidden = truncated(&view);
    let mut report = Report::new("resolve", &view).lines(view_lines(&view));
    if hidden > 0 {
        report = report.line(format!("{hidden} component(s) not expanded at depth {}", r.depth.unwrap_or_default()));
    }
    Ok(report)
}

/// Every credential `agent` holds about the product, under either of its ids.
fn held_for(net: &Network, product: &ProductRef, agent: &str) -> Result<(ProductId, Vec<VerifiableCredential>), CliError> {
    let id = net.product(product)?.id();
    let wallet = &net.agent(agent)?.wallet;
    let mut seen = BTreeSet::new();
    let mut held = Vec::new();
    for key in [id.clone(), ProductId::Product(product.clone())] {
        for vc in wallet.for_product(&key) {
            if seen.insert(vc.id.clone()) {
                held.push(vc.clone());
            }
        }
    }
    Ok((id, held))
}

/// Digests a credential accounts for: every link of a transfer chain.
fn covered(vc: &VerifiableCredential) -> Vec<Digest256> {
    match TransferCredential::from_credential(vc.clone()) {
        Ok(chain) => chain.links().iter().map(VerifiableCredential::digest).collect(),
        Err(_) => vec![vc.digest()],
    }
}

/// The audit of what `holder` presents with the withheld credentials left
/// out, and the concealments those withheld credentials should cause.
pub fn audit(net: &Network, a: &AuditArgs) -> Result<(Report, AuditReport), CliError> {
    let (id, held) = held_for(net, &a.product, &a.holder)?;
    for w in &a.withhold {
        if !held.iter().any(|vc| &vc.id == w) {
            return Err(CliError::Invalid(format!("{} holds no credential {w} for {}", a.holder, a.product)));
        }
    }
    let hide = |vc: &VerifiableCredential| {
        a.withhold.contains(&vc.id) || vc.category().is_some_and(|c| a.withhold_category.iter().any(|w| w == c))
    };
    let (withheld, kept): (Vec<_>, Vec<_>) = held.into_iter().partition(|vc| hide(vc));

    let everything: Vec<_> = kept.iter().chain(&withheld).cloned().collect();
    let full = audit_completeness(&id, &net.ledger, &everything);
    let expected_all: BTreeSet<Digest256> = full.concealed().into_iter().chain(matched(&full)).collect();
    let still_shown: BTreeSet<Digest256> = kept.iter().flat_map(covered).collect();
    let should_conceal: BTreeSet<Digest256> = withheld
        .iter()
        .flat_map(covered)
        .filter(|d| expected_all.contains(d) && !still_shown.contains(d))
        .collect();

    let report = audit_completeness(&id, &net.ledger, &kept);
    let mut failures = Vec::new();
    let concealed = report.concealed();
    for d in concealed.difference(&should_conceal) {
        failures.push(format!("concealed {d}, which was not withheld"));
    }
    for d in should_conceal.difference(&concealed) {
        failures.push(format!("withheld {d} went unnoticed"));
    }
    for d in report.unverifiable() {
        failures.push(format!("unverifiable {d}"));
    }
    let summary = if report.is_complete() {
        format!("{}: complete, {} credential(s) matched", a.product, report.findings.len())
    } else {
        format!(
            "{}: {} concealed, {} unverifiable of {} finding(s)",
            a.product,
            concealed.len(),
            report.unverifiable().len(),
            report.findings.len()
        )
    };
    let withheld_ids: Vec<&str> = withheld.iter().map(|vc| vc.id.as_str()).collect();
    let text = Report::new(
        "audit",
        json!({ "holder": a.holder, "withheld": withheld_ids, "report": report }),
    )
    .lines(report.lines())
    .line(summary)
    .failures(failures);
    Ok((text, report))
}

fn matched(report: &AuditReport) -> Vec<Digest256> {
    report
        .findings
        .iter()
        .filter_map(|f| match f {
            dppkit_core::dpp::Finding::Matched { digest, .. } => Some(*digest),
            _ => None,
        })
        .collect()
}

fn name_of(net: &Network, did: &Did) -> String {
    net.agent_holding(did).map_or_else(|| did.to_string(), |a| a.name.clone())
}

/// The longest ownership chain `agent` holds for `product`.
fn longest_chain(net: &Network, product: &ProductRef, agent: &str) -> Result<Option<TransferCredential>, CliError> {
    Ok(net
        .agent(agent)?
        .wallet
        .by_category(&ProductId::Product(product.clone()), "ownership")
        .into_iter()
        .filter_map(|vc| TransferCredential::from_credential(vc.clone()).ok())
        .filter(|tc| &tc.product() == product)
        .max_by_key(TransferCredential::len))
}

pub fn verify_chain(net: &Network, h: &HolderArgs) -> Result<Report, CliError> {
    let state = net.product(&h.product)?.clone();
    let holder = net.agent(&h.holder)?;
    match &state.did {
        Some(did) => {
            let controller = net.ledger.resolve_did(did)?.controller.clone();
            let history = net.owner_history(&h.product)?;
            let owns = holder.wallet.holds(&controller);
            let report = Report::new(
                "verify-chain",
                json!({ "product": h.product, "proposal": state.proposal, "controller": controller, "owners": history, "holderControls": owns }),
            )
            .line(format!("{} controlled by {} ({})", h.product, controller, name_of(net, &controller)))
            .line(format!("owners: {}", history.join(" -> ")));
            Ok(if owns { report } else { report.failures([format!("{} does not control {}", h.holder, h.product)]) })
        }
        None => {
            let head = longest_chain(net, &h.product, &h.holder)?
                .ok_or_else(|| CliError::Invalid(format!("{} holds no transfer credential for {}", h.holder, h.product)))?;
            let chain =
                verify_transfer_chain(&head, &net.ledger, &net.commercial.trusted_manufacturers(), net.now());
            let mut failures = chain.failures();
            if head.buyer() != holder.did() {
                failures.push(format!("the chain's last buyer is {}, not {}", name_of(net, head.buyer()), h.holder));
            }
            let mut lines: Vec<String> = chain
                .links
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    format!(
                        "link {i}: {} -> {}  {}",
                        name_of(net, &l.seller),
                        name_of(net, &l.buyer),
                        if l.is_valid() { "ok" } else { "INVALID" }
                    )
                })
                .collect();
            lines.push(match chain.owner() {
                Some(owner) => format!("valid chain of {}; owner {}", chain.links.len(), name_of(net, owner)),
                None => format!("chain of {} does not verify", chain.links.len()),
            });
            Ok(Report::new("verify-chain", json!({ "product": h.product, "proposal": state.proposal, "chain": chain }))
                .lines(lines)
                .failures(failures))
        }
    }
}

/// Deterministic challenge: bound to the session's history and the parties,
/// so checking never advances the session's generator.
fn challenge_nonce(net: &Network, presenter: &str, customer: &str, product: &ProductRef) -> Nonce {
    let seed = format!("{}|{presenter}|{customer}|{product}", net.transcript().digest());
    Nonce(sha256(seed.as_bytes()).as_bytes()[..16].to_vec())
}

pub fn fraud_check(net: &Network, f: &FraudArgs) -> Result<Report, CliError> {
    let state = net.product(&f.product)?;
    if state.proposal != Proposal::P082 {
        return Err(CliError::Invalid(format!("fraud checks verify transfer chains; {} follows p081", f.product)));
    }
    let presenter = net.agent(&f.presenter)?;
    let customer = net.agent(&f.customer)?;
    let source = f.chain_from.as_deref().unwrap_or(&f.presenter);
    let credentials: Vec<VerifiableCredential> = net
        .agent(source)?
        .wallet
        .by_category(&ProductId::Product(f.product.clone()), "ownership")
        .into_iter()
        .cloned()
        .collect();
    let signer = match &f.impersonate {
        None => presenter.identity.clone(),
        Some(name) => Identity { did: net.agent(name)?.did().clone(), keys: presenter.identity.keys.clone() },
    };
    let challenge =
        Challenge { audience: customer.did().clone(), nonce: challenge_nonce(net, &f.presenter, &f.customer, &f.product) };
    let failures;
    let verdict = if credentials.is_empty() {
        failures = vec![format!("{source} holds no transfer credential for {}", f.product)];
        None
    } else {
        let vp = create_presentation(&signer, credentials, &challenge.audience, challenge.nonce.clone(), net.now())
            .map_err(LifecycleError::from)?;
        let report = detect_fraud(&vp, &net.commercial, &net.ledger, &challenge, net.now());
        failures = report.failures();
        Some(report)
    };
    let fraudulent = verdict.as_ref().is_none_or(|r| r.fraudulent());
    let expected = f.expect == Expectation::Fraud;
    let mut lines = vec![format!(
        "{} presents {}'s chain{} to {}",
        f.presenter,
        source,
        f.impersonate.as_ref().map(|x| format!(" claiming to be {x}")).unwrap_or_default(),
        f.customer
    )];
    lines.extend(failures.iter().map(|x| format!("  failed: {x}")));
    lines.push(format!("verdict: {}", if fraudulent { "FRAUD" } else { "clean" }));
    let mismatch = (fraudulent != expected).then(|| {
        format!("expected {}, got {}", if expected { "fraud" } else { "clean" }, if fraudulent { "fraud" } else { "clean" })
    });
    Ok(Report::new(
        "fraud-check",
        json!({
            "product": f.product, "presenter": f.presenter, "chainFrom": source, "impersonate": f.impersonate,
            "customer": f.customer, "fraudulent": fraudulent, "report": verdict, "failedChecks": failures,
        }),
    )
    .lines(lines)
    .failures(mismatch))
}

/// Products `agent` minted under `proposal`, and all proposals it used.
fn minted_by(net: &Network, agent: &str) -> BTreeMap<Proposal, i64> {
    let mut out = BTreeMap::new();
    for p in net.products().filter(|p| p.manufacturer == agent) {
        *out.entry(p.proposal).or_insert(0) += 1;
    }
    out
}

fn reconciliation(net: &Network, agent: &str, proposal: Option<Proposal>) -> Result<Reconciliation, CliError> {
    let minted = minted_by(net, agent);
    let proposal = match proposal {
        Some(p) => p,
        None if minted.len() > 1 => {
            return Err(CliError::Invalid(format!("{agent} minted under both designs; pass --proposal")))
        }
        None => minted.keys().next().copied().unwrap_or(Proposal::P081),
    };
    let count = minted.get(&proposal).copied().unwrap_or(0);
    let analytic = manufacturer_cost(proposal, count, net.ledger.fees())?;
    let payers = BTreeSet::from([net.agent(agent)?.did().clone()]);
    Ok(reconcile(&analytic, &net.ledger, &payers)?)
}

fn reconciliation_lines(agent: &str, r: &Reconciliation) -> Vec<String> {
    vec![format!(
        "reconcile {agent}: estimate {} tokens, ledger {} tokens over {} transaction(s), delta {}",
        r.analytic.total_tokens.normalize(),
        r.ledger_tokens.normalize(),
        r.transactions,
        r.delta.normalize()
    )]
}

/// Cost figures; `net` is needed only to reconcile against a session.
pub fn cost(net: Option<&Network>, c: &CostArgs) -> Result<Report, CliError> {
    let mut fees = net.map_or_else(FeeSchedule::default, |n| n.ledger.fees().clone());
    if let Some(price) = c.price {
        fees.token_price_eur = price;
        fees.validate()?;
    }
    let proposals = match c.proposal {
        Some(p) => vec![p],
        None => vec![Proposal::P081, Proposal::P082],
    };
    let mut reports: Vec<CostReport> =
        proposals.iter().map(|p| manufacturer_cost(*p, c.products, &fees)).collect::<Result<_, _>>()?;
    if let Some(n) = c.owner_updates {
        reports.push(owner_update_cost(n, &fees)?);
    }
    let mut lines = cost_rows(&reports.iter().collect::<Vec<_>>());
    let ratio = per_product_ratio(&fees);
    if c.proposal.is_none() {
        lines.push(format!("per-product ratio p081:p082 = {}", ratio.normalize()));
    }
    let mut failures = Vec::new();
    let mut record = json!({ "reports": reports, "ratio": ratio });
    if let Some(agent) = &c.reconcile {
        let net = net.ok_or_else(|| CliError::Invalid("--reconcile needs a session".into()))?;
        let r = reconciliation(net, agent, c.proposal)?;
        lines.extend(reconciliation_lines(agent, &r));
        if !r.passes() {
            failures.push(format!("ledger differs from the estimate by {} tokens", r.delta.normalize()));
        }
        record["reconciliation"] = serde_json::to_value(&r).expect("reports serialize");
    }
    Ok(Report::new("cost", record).lines(lines).failures(failures))
}

/// Writes the audit bundle; every file is canonical JSON, so exporting a
/// frozen session twice yields identical bytes.
pub fn export(net: &Network, e: &ExportArgs) -> Result<Report, CliError> {
    let state = net.product(&e.audit.product)?.clone();
    let view = net.resolve(&state.id(), None)?;
    let chain = verify_chain(net, &HolderArgs { product: e.audit.product.clone(), holder: e.audit.holder.clone() })?;
    let (audit_report, _) = audit(net, &e.audit)?;
    let owners = net.owner_history(&e.audit.product)?;
    let recon = reconciliation(net, &state.manufacturer, Some(state.proposal))?;

    fs::create_dir_all(&e.out).map_err(CliError::io(&e.out))?;
    let write = |name: &str, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = e.out.join(name);
        fs::write(&path, bytes).map_err(CliError::io(path))
    };
    write("view.json", canonical(&view))?;
    write("chain.json", chain.to_record())?;
    write("audit.json", audit_report.to_record())?;
    write("owners.json", canonical(&json!({ "product": e.audit.product, "owners": owners })))?;
    write("cost.json", recon.to_canonical_bytes())?;

    let failures: Vec<String> = chain
        .failures
        .iter()
        .chain(&audit_report.failures)
        .cloned()
        .chain((!recon.passes()).then(|| format!("cost reconciliation delta {}", recon.delta.normalize())))
        .collect();
    let files = ["view.json", "chain.json", "audit.json", "owners.json", "cost.json"];
    Ok(Report::new("export", json!({ "product": e.audit.product, "out": e.out, "files": files }))
        .line(format!("wrote {} to {}", files.join(", "), e.out.display()))
        .lines(audit_report.lines.iter().filter(|l| l.starts_with("CONCEALED")).cloned())
        .failures(failures))
}

fn canonical<T: serde::Serialize>(value: &T) -> Vec<u8> {
    dppkit_core::identity::to_canonical(value).expect("bundle files hold no floats")
}
