use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DppError;

/// Actors along the value chain that may read passport data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    Manufacturer,
    Importer,
    Dealer,
    Retailer,
    Customs,
    Customer,
    EndUser,
    Repairer,
    Recycler,
}

impl Role {
    pub const ALL: [Role; 9] = [
        Role::Manufacturer,
        Role::Importer,
        Role::Dealer,
        Role::Retailer,
        Role::Customs,
        Role::Customer,
        Role::EndUser,
        Role::Repairer,
        Role::Recycler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Manufacturer => "manufacturer",
            Role::Importer => "importer",
            Role::Dealer => "dealer",
            Role::Retailer => "retailer",
            Role::Customs => "customs",
            Role::Customer => "customer",
            Role::EndUser => "endUser",
            Role::Repairer => "repairer",
            Role::Recycler => "recycler",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| DppError::UnknownRole(s.to_owned()))
    }
}

/// The closed set of claim categories for a product group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    categories: BTreeSet<String>,
}

const DEFAULT_TAXONOMY: &str = include_str!("../../config/taxonomy.toml");
const EXAMPLE_POLICY: &str = include_str!("../../config/policy.toml");

impl Taxonomy {
    pub fn from_toml(text: &str) -> Result<Self, DppError> {
        let taxonomy: Taxonomy = toml::from_str(text).map_err(|e| DppError::Config(e.to_string()))?;
        if taxonomy.categories.is_empty() {
            return Err(DppError::Config("taxonomy has no categories".into()));
        }
        Ok(taxonomy)
    }

    pub fn contains(&self, category: &str) -> bool {
        self.categories.contains(category)
    }

    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::from_toml(DEFAULT_TAXONOMY).expect("bundled taxonomy parses")
    }
}

/// Read grants: which claim categories each role may see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessPolicy {
    grants: BTreeMap<Role, BTreeSet<String>>,
}

impl AccessPolicy {
    pub fn new(grants: BTreeMap<Role, BTreeSet<String>>, taxonomy: &Taxonomy) -> Result<Self, DppError> {
        for (role, categories) in &grants {
            if let Some(bad) = categories.iter().find(|c| !taxonomy.contains(c)) {
                return Err(DppError::Config(format!("role {role} is granted unknown category {bad}")));
            }
        }
        Ok(Self { grants })
    }

    pub fn from_toml(text: &str, taxonomy: &Taxonomy) -> Result<Self, DppError> {
        let raw: AccessPolicy = toml::from_str(text).map_err(|e| DppError::Config(e.to_string()))?;
        Self::new(raw.grants, taxonomy)
    }

    /// The bundled example fixture over the default taxonomy.
    pub fn example() -> Self {
        Self::from_toml(EXAMPLE_POLICY, &Taxonomy::default()).expect("bundled policy parses")
    }

    pub fn grants(&self, role: Role) -> Result<&BTreeSet<String>, DppError> {
        self.grants.get(&role).ok_or_else(|| DppError::UnknownRole(role.to_string()))
    }

    pub fn allows(&self, role: Role, category: &str) -> bool {
        self.grants.get(&role).is_some_and(|g| g.contains(category))
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.grants.keys().copied()
    }
}
