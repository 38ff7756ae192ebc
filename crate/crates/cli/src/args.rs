use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dppkit_core::dpp::{ClaimSet, Granularity, Role};
use dppkit_core::identity::{Did, ProductId, ProductRef};
use dppkit_core::lifecycle::Proposal;
use rust_decimal::Decimal;

#[derive(Debug, Parser)]
#[command(name = "dppkit", version, about = "Digital product passports on a simulated DID registry")]
pub struct Cli {
    /// Ledger file; its session journal lives next to it as `<file>.script`.
    #[arg(long, env = "DPPKIT_LEDGER", global = true, default_value = "dppkit.ledger")]
    pub ledger: PathBuf,
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,
    /// Exit with status 3 when a report finds a problem.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One canonical JSON record per report.
    Record,
}

/// A single scenario line, parsed with the same grammar as the command line.
#[derive(Debug, Parser)]
#[command(name = "scenario", no_binary_name = true, disable_help_flag = true, disable_version_flag = true)]
pub struct Line {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Create or re-validate the session ledger.
    #[command(subcommand)]
    Ledger(LedgerCmd),
    /// Register, fund and list agents.
    #[command(subcommand)]
    Agent(AgentCmd),
    /// Mint product passports.
    #[command(subcommand)]
    Product(ProductCmd),
    /// Sell a product; the design it was minted under decides the protocol.
    Transfer(TransferArgs),
    /// Publish the owner's key in a product DID document.
    ClaimControl(OwnerArgs),
    /// Have a listed workshop record a repair.
    Repair(RepairArgs),
    /// Assemble the current passport, optionally filtered for a role.
    Resolve(ResolveArgs),
    /// Compare what a holder can show with what the registry expects.
    Audit(AuditArgs),
    /// Verify the ownership chain a holder keeps for a product.
    VerifyChain(HolderArgs),
    /// Check a seller's presentation the way a customer would.
    FraudCheck(FraudArgs),
    /// Manufacturer and owner registry costs.
    Cost(CostArgs),
    /// Run scripted scenarios, built in or from a file.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Write an audit bundle for a product.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Subcommand)]
pub enum LedgerCmd {
    /// Start an empty ledger and session.
    Init {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overwrite an existing ledger.
        #[arg(long)]
        force: bool,
    },
    /// Replay the ledger file and the session journal and compare them.
    Replay,
}

#[derive(Debug, Clone, Subcommand)]
pub enum AgentCmd {
    /// Register an agent DID, paying its creation fee from `--funds`.
    Create {
        name: String,
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long, default_value = "1000")]
        funds: Decimal,
        /// Enter the agent in the commercial registry.
        #[arg(long)]
        listed: bool,
    },
    /// Credit an agent's account.
    Fund { name: String, amount: Decimal },
    List,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ProductCmd {
    Mint(MintArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MintArgs {
    /// GTIN, or GTIN/serial for an individual item.
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long, value_parser = parse_proposal)]
    pub proposal: Proposal,
    /// Manufacturer agent.
    #[arg(long)]
    pub by: String,
    /// Defaults to item for serialized references, model otherwise.
    #[arg(long, value_parser = parse_granularity)]
    pub granularity: Option<Granularity>,
    /// `category:component:key=value[,key=value]`; repeatable.
    #[arg(long = "claim", value_parser = parse_claim)]
    pub claims: Vec<ClaimSet>,
    /// Component product: a DID or a GTIN[/serial]; repeatable.
    #[arg(long = "component", value_parser = parse_product_id)]
    pub components: Vec<ProductId>,
    /// Keep the composition in the product document (items with a DID).
    #[arg(long)]
    pub hybrid: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub price: Option<Decimal>,
    /// Hand control to this already-held anonymous DID instead of a fresh one.
    #[arg(long, value_parser = parse_did)]
    pub reuse: Option<Did>,
}

#[derive(Debug, Clone, Args)]
pub struct OwnerArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long)]
    pub owner: String,
}

#[derive(Debug, Clone, Args)]
pub struct RepairArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long)]
    pub owner: String,
    #[arg(long)]
    pub workshop: String,
    #[arg(long, value_parser = parse_claim)]
    pub claim: ClaimSet,
}

#[derive(Debug, Clone, Args)]
pub struct ResolveArgs {
    /// Product DID or GTIN[/serial].
    #[arg(value_parser = parse_product_id)]
    pub target: ProductId,
    #[arg(long, value_parser = parse_role)]
    pub role: Option<Role>,
    /// Component levels to expand; unlimited when absent.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Access policy TOML; the built-in example policy when absent.
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long)]
    pub holder: String,
    /// Credential id to leave out of the presented set; repeatable.
    #[arg(long)]
    pub withhold: Vec<String>,
    /// Leave out every credential of this category; repeatable.
    #[arg(long)]
    pub withhold_category: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct HolderArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    #[arg(long)]
    pub holder: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Expectation {
    Clean,
    Fraud,
}

#[derive(Debug, Clone, Args)]
pub struct FraudArgs {
    #[arg(value_parser = parse_product)]
    pub product: ProductRef,
    /// Agent signing the presentation.
    #[arg(long)]
    pub presenter: String,
    /// Agent whose transfer credentials are presented; the presenter's own by default.
    #[arg(long)]
    pub chain_from: Option<String>,
    /// Claim to be this agent while signing with the presenter's key.
    #[arg(long)]
    pub impersonate: Option<String>,
    /// Agent receiving the presentation.
    #[arg(long)]
    pub customer: String,
    /// The report fails when the verdict differs.
    #[arg(long, value_enum, default_value_t = Expectation::Clean)]
    pub expect: Expectation,
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    /// One design; both and their ratio when absent.
    #[arg(long, value_parser = parse_proposal)]
    pub proposal: Option<Proposal>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub products: i64,
    /// Also price this many owner document updates.
    #[arg(long, allow_negative_numbers = true)]
    pub owner_updates: Option<i64>,
    /// EUR per token; the fee schedule's price when absent.
    #[arg(long)]
    pub price: Option<Decimal>,
    /// Compare with the fees this manufacturer was charged in the session.
    #[arg(long)]
    pub reconcile: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ScenarioCmd {
    /// Run a built-in scenario by name, or a scenario file.
    Run {
        scenario: String,
        /// Override the depth of every resolve in the scenario.
        #[arg(long)]
        depth: Option<usize>,
        /// Keep the resulting ledger and session at `--ledger`.
        #[arg(long)]
        save: bool,
    },
    List,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub audit: AuditArgs,
    /// Directory to write into; created when missing.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_role(s: &str) -> Result<Role, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_proposal(s: &str) -> Result<Proposal, String> {
    s.parse()
}

fn parse_granularity(s: &str) -> Result<Granularity, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_claim(s: &str) -> Result<ClaimSet, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_product(s: &str) -> Result<ProductRef, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_did(s: &str) -> Result<Did, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_product_id(s: &str) -> Result<ProductId, String> {
    s.parse().map_err(|e| format!("{e}"))
}
