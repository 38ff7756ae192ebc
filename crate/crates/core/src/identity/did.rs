use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::keys::{sha256, PublicKey};
use super::IdentityError;

/// Method name used for every DID minted by this crate unless configured.
pub const DEFAULT_METHOD: &str = "dppkit";

/// A decentralized identifier rendered as `did:<method>:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Did {
    method: String,
    id: String,
}

impl Did {
    pub fn new(method: &str, id: &str) -> Result<Self, IdentityError> {
        check_method(method)?;
        if id.is_empty() {
            return Err(IdentityError::InvalidDid(format!("did:{method}:"), "empty method-specific id"));
        }
        if id.chars().any(|c| c == ':' || c.is_whitespace()) {
            return Err(IdentityError::InvalidDid(
                format!("did:{method}:{id}"),
                "method-specific id contains ':' or whitespace",
            ));
        }
        Ok(Self { method: method.to_owned(), id: id.to_owned() })
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn method_specific_id(&self) -> &str {
        &self.id
    }

    /// DID URL naming a verification method of this DID.
    pub fn key_ref(&self, key_id: &str) -> String {
        format!("{self}#{key_id}")
    }
}

fn check_method(method: &str) -> Result<(), IdentityError> {
    if method.is_empty() || !method.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()) {
        return Err(IdentityError::InvalidMethod(method.to_owned()));
    }
    Ok(())
}

/// Derives a DID whose method-specific id is the base-58 SHA-256 digest of
/// `public_key`. Pure: the same key always yields the same DID.
pub fn derive_did(public_key: &PublicKey, method: &str) -> Result<Did, IdentityError> {
    check_method(method)?;
    let digest = sha256(public_key.as_bytes());
    Ok(Did { method: method.to_owned(), id: bs58::encode(digest.as_bytes()).into_string() })
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "did:{}:{}", self.method, self.id)
    }
}

impl FromStr for Did {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("did"), Some(method), Some(id)) => Did::new(method, id),
            _ => Err(IdentityError::InvalidDid(s.to_owned(), "expected did:<method>:<id>")),
        }
    }
}

impl Serialize for Did {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Did {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
