use std::collections::BTreeMap;

use bitvec::prelude::{BitVec, Msb0};
use serde::{Serialize, Serializer};

use crate::identity::{sha256, Did, Digest256, ProductRef, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Revocation {
    pub at: Timestamp,
    pub seq: u64,
}

/// Revocation bitstring held on the registry. Bits only ever go from 0 to
/// 1 and the list only ever grows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusList {
    pub id: String,
    pub owner: Did,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductRef>,
    #[serde(serialize_with = "bits_hex")]
    bits: BitVec<u8, Msb0>,
    revoked: BTreeMap<u32, Revocation>,
    holders: BTreeMap<u32, Did>,
}

fn bits_hex<S: Serializer>(bits: &BitVec<u8, Msb0>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}:{}", bits.len(), hex::encode(bits.as_raw_slice())))
}

impl StatusList {
    pub fn new(id: String, owner: Did, product: Option<ProductRef>) -> Self {
        Self { id, owner, product, bits: BitVec::new(), revoked: BTreeMap::new(), holders: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_set(&self, index: u32) -> bool {
        self.bits.get(index as usize).map(|b| *b).unwrap_or(false)
    }

    /// Revoked as seen at logical time `at`: set by a transaction no later than `at`.
    pub fn is_revoked_at(&self, index: u32, at: Timestamp) -> bool {
        self.revoked.get(&index).is_some_and(|r| r.at <= at)
    }

    pub fn revocation(&self, index: u32) -> Option<Revocation> {
        self.revoked.get(&index).copied()
    }

    pub fn holder(&self, index: u32) -> Option<&Did> {
        self.holders.get(&index)
    }

    pub fn holders(&self) -> impl Iterator<Item = (u32, &Did)> {
        self.holders.iter().map(|(i, d)| (*i, d))
    }

    /// Smallest index above every slot in use.
    pub fn next_index(&self) -> u32 {
        let by_holder = self.holders.keys().next_back().map_or(0, |i| i + 1);
        by_holder.max(self.bits.len() as u32)
    }

    /// Digest of the bitstring after setting `index`, as carried by the
    /// update transaction.
    pub fn digest_with(&self, index: u32) -> Digest256 {
        let mut bits = self.bits.clone();
        set_bit(&mut bits, index);
        digest_bits(&bits)
    }

    pub fn bits_digest(&self) -> Digest256 {
        digest_bits(&self.bits)
    }

    pub(crate) fn set(&mut self, index: u32, revocation: Revocation) {
        set_bit(&mut self.bits, index);
        self.revoked.entry(index).or_insert(revocation);
    }

    pub(crate) fn assign(&mut self, index: u32, holder: Did) {
        if self.bits.len() <= index as usize {
            self.bits.resize(index as usize + 1, false);
        }
        self.holders.insert(index, holder);
    }
}

fn set_bit(bits: &mut BitVec<u8, Msb0>, index: u32) {
    let index = index as usize;
    if bits.len() <= index {
        bits.resize(index + 1, false);
    }
    bits.set(index, true);
}

fn digest_bits(bits: &BitVec<u8, Msb0>) -> Digest256 {
    let mut bytes = (bits.len() as u64).to_be_bytes().to_vec();
    bytes.extend_from_slice(bits.as_raw_slice());
    sha256(&bytes)
}
