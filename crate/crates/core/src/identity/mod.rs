//! Identifiers, key material, canonical encoding and DID documents.
//!
//! Everything here is an immutable value type. Higher layers (registry,
//! credentials, passports) build on these without adding state of their own.

mod canonical;
mod did;
mod document;
mod gtin;
mod keys;

pub use canonical::{canonicalize, digest_of, to_canonical, to_canonical_value};
pub use did::{derive_did, Did, DEFAULT_METHOD};
pub use document::{Capability, Delegation, DidDocument, Service, VerificationMethod};
pub use gtin::{validate_gtin, Gtin, ProductId, ProductRef};
pub use keys::{generate_key_pair, sha256, verify, Digest256, Identity, KeyPair, PublicKey, Signature};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Caller-supplied logical time. The library never reads a wall clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn next(self) -> Timestamp {
        Timestamp(self.0 + 1)
    }
}

impl std::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("key seed must be 32 bytes, got {0}")]
    SeedLength(usize),
    #[error("invalid DID {0:?}: {1}")]
    InvalidDid(String, &'static str),
    #[error("invalid DID method {0:?}: expected non-empty lowercase ASCII")]
    InvalidMethod(String),
    #[error("GTIN must be 13 or 14 digits, got {0} characters")]
    GtinLength(usize),
    #[error("GTIN contains a non-digit character: {0:?}")]
    GtinNonNumeric(String),
    #[error("GTIN {0} fails its check digit")]
    GtinCheckDigit(String),
    #[error("invalid serial number {0:?}")]
    InvalidSerial(String),
    #[error("cannot canonicalize {0}")]
    UnsupportedScalar(String),
    #[error("invalid encoding: {0}")]
    Encoding(String),
}
