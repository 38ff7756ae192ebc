use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dpp::Role;
use crate::identity::{Did, PublicKey};

/// A legally registered company as listed in the public company registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Company {
    pub legal_name: String,
    pub role: Role,
    pub keys: Vec<PublicKey>,
}

/// Public list of legal companies and their keys. Membership is the trust
/// root for fraud checks and for accepting manufacturers and workshops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommercialRegistry {
    companies: BTreeMap<Did, Company>,
}

impl CommercialRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the entry for `did`.
    pub fn register(&mut self, did: Did, legal_name: &str, role: Role, keys: Vec<PublicKey>) {
        self.companies.insert(did, Company { legal_name: legal_name.to_owned(), role, keys });
    }

    pub fn contains(&self, did: &Did) -> bool {
        self.companies.contains_key(did)
    }

    pub fn get(&self, did: &Did) -> Option<&Company> {
        self.companies.get(did)
    }

    /// Keys listed for `did`; empty when it is not a registered company.
    pub fn keys(&self, did: &Did) -> &[PublicKey] {
        self.companies.get(did).map_or(&[], |c| c.keys.as_slice())
    }

    pub fn trusted_manufacturers(&self) -> BTreeSet<Did> {
        self.companies.iter().filter(|(_, c)| c.role == Role::Manufacturer).map(|(d, _)| d.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Did, &Company)> {
        self.companies.iter()
    }

    pub fn len(&self) -> usize {
        self.companies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.companies.is_empty()
    }
}
