//! End-to-end ownership and maintenance protocols for both designs, and the
//! checks a customer runs to spot a fraudulent seller.
//!
//! A [`Network`] owns the registry, every agent's wallet and a transcript of
//! protocol steps. Each protocol call is all-or-nothing: on error the
//! registry, the wallets involved, product bookkeeping and the transcript
//! are restored to their state before the call.

mod fraud;
mod p081;
mod p082;
mod registry;
mod transcript;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::credentials::CredentialError;
use crate::dpp::{
    audit_completeness, resolve_dpp, AuditReport, DppError, DppView, OriginalDpp, ResolveOptions, Role, Taxonomy,
};
use crate::identity::{
    Did, DidDocument, Identity, IdentityError, ProductId, ProductRef, Timestamp, DEFAULT_METHOD,
};
use crate::vdr::{FeeSchedule, Ledger, LedgerError, LedgerTransaction};
use crate::wallet::{Wallet, WalletError};

pub use fraud::{detect_fraud, Challenge, FraudReport};
pub use registry::{CommercialRegistry, Company};
pub use transcript::{Event, Transcript};

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("no agent named {0}")]
    UnknownAgent(String),
    #[error("agent {0} already exists")]
    DuplicateAgent(String),
    #[error("{0} is not in the commercial registry")]
    NotListed(String),
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("product {0} is already minted")]
    AlreadyMinted(ProductRef),
    #[error("product {product} follows {actual}, not {expected}")]
    WrongProposal { product: ProductRef, expected: Proposal, actual: Proposal },
    #[error("{agent} does not own {product}")]
    NotOwner { agent: String, product: String },
    #[error("{agent} already sold {product}: its transfer credential is revoked")]
    DoubleSale { agent: String, product: ProductRef },
    #[error("seller and buyer are both {0}")]
    SameParty(String),
    #[error("{agent} does not hold identity {did}")]
    ForeignIdentity { agent: String, did: Did },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Dpp(#[from] DppError),
    #[error(transparent)]
    Wallet(#[from] WalletError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

/// Which ownership design a product follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    /// A DID per product; ownership is the document's controller.
    P081,
    /// GTIN + serial only; ownership is a chain of transfer credentials.
    P082,
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Proposal::P081 => "p081",
            Proposal::P082 => "p082",
        })
    }
}

impl FromStr for Proposal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p081" | "p08.1" => Ok(Proposal::P081),
            "p082" | "p08.2" => Ok(Proposal::P082),
            other => Err(format!("unknown proposal {other:?}, expected p081 or p082")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub name: String,
    pub identity: Identity,
    pub role: Role,
    pub wallet: Wallet,
}

impl Agent {
    pub fn did(&self) -> &Did {
        &self.identity.did
    }
}

/// Orchestrator bookkeeping for one minted product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductState {
    pub proposal: Proposal,
    pub product: ProductRef,
    /// The product's own DID; DID-per-product design only.
    pub did: Option<Did>,
    pub manufacturer: String,
    /// Agent names in order of ownership, manufacturer first.
    pub owners: Vec<String>,
}

impl ProductState {
    pub fn owner(&self) -> &str {
        self.owners.last().expect("the manufacturer is always listed")
    }

    /// How the registry addresses the product.
    pub fn id(&self) -> ProductId {
        match &self.did {
            Some(did) => ProductId::Did(did.clone()),
            None => ProductId::Product(self.product.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MintReceipt {
    pub product: ProductId,
    pub dpp: OriginalDpp,
    pub transactions: Vec<LedgerTransaction>,
}

#[derive(Debug, Clone)]
pub struct TransferReceipt {
    /// The DID now owning the product: an anonymous DID for a DID-per-product item, the
    /// buyer's own DID for a credential-chain item.
    pub owner: Did,
    pub transactions: Vec<LedgerTransaction>,
    pub moved: Vec<String>,
    pub warnings: Vec<String>,
}

struct Checkpoint {
    ledger: usize,
    agents: Vec<Agent>,
    products: BTreeMap<ProductRef, ProductState>,
    transcript: usize,
    clock: u64,
    rng: ChaCha20Rng,
}

pub struct Network {
    pub ledger: Ledger,
    pub commercial: CommercialRegistry,
    pub taxonomy: Taxonomy,
    agents: BTreeMap<String, Agent>,
    products: BTreeMap<ProductRef, ProductState>,
    transcript: Transcript,
    clock: u64,
    rng: ChaCha20Rng,
}

impl Network {
    /// Empty network. Every key generated later derives from `seed`.
    pub fn new(seed: u64, fees: FeeSchedule) -> Result<Self, LifecycleError> {
        Ok(Self {
            ledger: Ledger::new(fees)?,
            commercial: CommercialRegistry::new(),
            taxonomy: Taxonomy::default(),
            agents: BTreeMap::new(),
            products: BTreeMap::new(),
            transcript: Transcript::default(),
            clock: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        })
    }

    pub fn now(&self) -> Timestamp {
        Timestamp(self.clock)
    }

    pub(crate) fn tick(&mut self) -> Timestamp {
        self.clock += 1;
        Timestamp(self.clock)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn agent(&self, name: &str) -> Result<&Agent, LifecycleError> {
        self.agents.get(name).ok_or_else(|| LifecycleError::UnknownAgent(name.to_owned()))
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.agents.values()
    }

    /// The agent whose wallet holds `did`, as main or additional identity.
    pub fn agent_holding(&self, did: &Did) -> Option<&Agent> {
        self.agents.values().find(|a| a.wallet.holds(did))
    }

    pub fn product(&self, product: &ProductRef) -> Result<&ProductState, LifecycleError> {
        self.products.get(product).ok_or_else(|| LifecycleError::UnknownProduct(product.to_string()))
    }

    pub fn products(&self) -> impl Iterator<Item = &ProductState> {
        self.products.values()
    }

    pub fn wallets(&self) -> Vec<&Wallet> {
        self.agents.values().map(|a| &a.wallet).collect()
    }

    fn fresh_identity(&mut self) -> Result<Identity, LifecycleError> {
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        Ok(Identity::generate(&seed, DEFAULT_METHOD)?)
    }

    /// Fresh random bytes from the network's seeded generator, e.g. for
    /// presentation nonces.
    pub fn random_bytes(&mut self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        self.rng.fill_bytes(&mut out);
        out
    }

    pub(crate) fn log(&mut self, actor: &str, step: &str, product: Option<&ProductRef>, detail: &[(&str, String)]) {
        let at = self.now();
        self.transcript.push(at, actor, step, product.map(ToString::to_string), detail);
    }

    fn log_tx(&mut self, actor: &str, product: Option<&ProductRef>, tx: &LedgerTransaction) {
        let step = format!("ledger.{}", serde_json::to_value(tx.kind()).expect("kinds serialize").as_str().unwrap_or("?"));
        self.log(actor, &step, product, &[("seq", tx.seq.to_string()), ("fee", tx.fee_tokens.to_string())]);
    }

    /// Runs `f`; on error restores the registry, the named agents, product
    /// bookkeeping, the transcript, the clock and the generator.
    fn atomic<T>(
        &mut self,
        involved: &[&str],
        f: impl FnOnce(&mut Self) -> Result<T, LifecycleError>,
    ) -> Result<T, LifecycleError> {
        let mark = Checkpoint {
            ledger: self.ledger.len(),
            agents: involved.iter().filter_map(|n| self.agents.get(*n).cloned()).collect(),
            products: self.products.clone(),
            transcript: self.transcript.len(),
            clock: self.clock,
            rng: self.rng.clone(),
        };
        let result = f(self);
        if result.is_err() {
            self.ledger.rollback_to(mark.ledger);
            for agent in mark.agents {
                self.agents.insert(agent.name.clone(), agent);
            }
            self.products = mark.products;
            self.transcript.truncate(mark.transcript);
            self.clock = mark.clock;
            self.rng = mark.rng;
        }
        result
    }

    /// Removes an agent for exclusive use; the caller puts it back. Inside
    /// [`Network::atomic`] a lost agent is restored on error.
    fn take(&mut self, name: &str) -> Result<Agent, LifecycleError> {
        self.agents.remove(name).ok_or_else(|| LifecycleError::UnknownAgent(name.to_owned()))
    }

    fn put(&mut self, agent: Agent) {
        self.agents.insert(agent.name.clone(), agent);
    }

    fn require_listed(&self, name: &str) -> Result<(), LifecycleError> {
        if self.commercial.contains(self.agent(name)?.did()) {
            Ok(())
        } else {
            Err(LifecycleError::NotListed(name.to_owned()))
        }
    }

    fn require_proposal(&self, product: &ProductRef, expected: Proposal) -> Result<&ProductState, LifecycleError> {
        let state = self.product(product)?;
        if state.proposal != expected {
            return Err(LifecycleError::WrongProposal { product: product.clone(), expected, actual: state.proposal });
        }
        Ok(state)
    }

    /// Funds `funds` tokens, registers the agent's DID (paying the creation
    /// fee) and, when `listed`, enters it in the commercial registry.
    pub fn add_agent(&mut self, name: &str, role: Role, funds: Decimal, listed: bool) -> Result<Did, LifecycleError> {
        if self.agents.contains_key(name) {
            return Err(LifecycleError::DuplicateAgent(name.to_owned()));
        }
        self.atomic(&[], |net| {
            let now = net.tick();
            let identity = net.fresh_identity()?;
            let did = identity.did.clone();
            if funds > Decimal::ZERO {
                let tx = net.ledger.deposit(&did, funds, now)?;
                net.log_tx(name, None, &tx);
            }
            let tx = net.ledger.create_did(DidDocument::for_identity(&identity), &identity, now)?;
            net.log_tx(name, None, &tx);
            if listed {
                net.commercial.register(did.clone(), name, role, vec![identity.keys.public_key()]);
                net.log(name, "commercial.register", None, &[("role", role.to_string())]);
            }
            let wallet = Wallet::new(identity.clone());
            net.put(Agent { name: name.to_owned(), identity, role, wallet });
            Ok(did)
        })
    }

    /// Credits an agent's account.
    pub fn fund(&mut self, name: &str, amount: Decimal) -> Result<LedgerTransaction, LifecycleError> {
        let did = self.agent(name)?.did().clone();
        self.atomic(&[], |net| {
            let now = net.tick();
            let tx = net.ledger.deposit(&did, amount, now)?;
            net.log_tx(name, None, &tx);
            Ok(tx)
        })
    }

    /// Current passport of `product` as assembled from every wallet.
    pub fn resolve(&self, product: &ProductId, max_depth: Option<usize>) -> Result<DppView, LifecycleError> {
        let wallets = self.wallets();
        Ok(resolve_dpp(product, &self.ledger, &wallets, ResolveOptions { max_depth, now: self.now() })?)
    }

    /// Audits what `agent` holds about `product` against the registry.
    pub fn audit(&self, product: &ProductRef, agent: &str) -> Result<AuditReport, LifecycleError> {
        let state = self.product(product)?;
        let id = state.id();
        let wallet = &self.agent(agent)?.wallet;
        let mut presented: Vec<_> = wallet.for_product(&id).into_iter().cloned().collect();
        if id != ProductId::Product(product.clone()) {
            presented.extend(wallet.for_product(&ProductId::Product(product.clone())).into_iter().cloned());
        }
        Ok(audit_completeness(&id, &self.ledger, &presented))
    }

    /// Agent names in order of ownership, reconstructed from the registry
    /// rather than from bookkeeping.
    pub fn owner_history(&self, product: &ProductRef) -> Result<Vec<String>, LifecycleError> {
        let state = self.product(product)?;
        let name_of = |did: &Did| self.agent_holding(did).map_or_else(|| did.to_string(), |a| a.name.clone());
        match (&state.did, state.proposal) {
            (Some(did), _) => Ok(self.ledger.owner_history(did)?.iter().map(name_of).collect()),
            (None, _) => {
                let mut out = vec![state.manufacturer.clone()];
                if let Some(list) = self.ledger.product_status_list(product) {
                    out.extend(list.holders().map(|(_, d)| name_of(d)));
                }
                Ok(out)
            }
        }
    }
}
