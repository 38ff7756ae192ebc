use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::did::Did;
use super::IdentityError;

/// Checks the GS1 mod-10 check digit of a GTIN-13 or GTIN-14.
///
/// Malformed input (wrong length, non-digits) is an error, distinct from a
/// well-formed number whose check digit is wrong (`Ok(false)`).
pub fn validate_gtin(digits: &str) -> Result<bool, IdentityError> {
    let len = digits.chars().count();
    if len != 13 && len != 14 {
        return Err(IdentityError::GtinLength(len));
    }
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IdentityError::GtinNonNumeric(digits.to_owned()));
    }
    let bytes = digits.as_bytes();
    let (body, check) = bytes.split_at(bytes.len() - 1);
    // weights alternate 3,1,3,... starting next to the check digit
    let sum: u32 = body
        .iter()
        .rev()
        .enumerate()
        .map(|(i, b)| u32::from(b - b'0') * if i % 2 == 0 { 3 } else { 1 })
        .sum();
    let expected = (10 - sum % 10) % 10;
    Ok(u32::from(check[0] - b'0') == expected)
}

/// A GTIN-13 or GTIN-14 with a verified check digit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gtin(String);

impl Gtin {
    pub fn parse(digits: &str) -> Result<Self, IdentityError> {
        if validate_gtin(digits)? {
            Ok(Self(digits.to_owned()))
        } else {
            Err(IdentityError::GtinCheckDigit(digits.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Gtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Gtin {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Gtin {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Gtin::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// GTIN plus an optional serial number. The serial is present exactly when
/// the reference names an individual item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProductRef {
    pub gtin: Gtin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serial: Option<String>,
}

impl ProductRef {
    pub fn model(gtin: Gtin) -> Self {
        Self { gtin, serial: None }
    }

    pub fn item(gtin: Gtin, serial: &str) -> Result<Self, IdentityError> {
        // GS1 serial numbers: up to 20 printable characters
        if serial.is_empty()
            || serial.len() > 20
            || !serial.bytes().all(|b| b.is_ascii_graphic() && b != b'/' && b != b':')
        {
            return Err(IdentityError::InvalidSerial(serial.to_owned()));
        }
        Ok(Self { gtin, serial: Some(serial.to_owned()) })
    }

    pub fn is_item(&self) -> bool {
        self.serial.is_some()
    }

    /// The reference with the serial stripped, i.e. the model it belongs to.
    pub fn model_ref(&self) -> ProductRef {
        ProductRef { gtin: self.gtin.clone(), serial: None }
    }
}

impl fmt::Display for ProductRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.serial {
            Some(serial) => write!(f, "{}/{}", self.gtin, serial),
            None => write!(f, "{}", self.gtin),
        }
    }
}

impl FromStr for ProductRef {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            Some((gtin, serial)) => ProductRef::item(Gtin::parse(gtin)?, serial),
            None => Ok(ProductRef::model(Gtin::parse(s)?)),
        }
    }
}

/// How a product is addressed: by its own DID, or by GTIN (+ serial) alone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ProductId {
    Did(Did),
    Product(ProductRef),
}

impl fmt::Display for ProductId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductId::Did(did) => did.fmt(f),
            ProductId::Product(product) => product.fmt(f),
        }
    }
}

impl FromStr for ProductId {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with("did:") {
            Ok(ProductId::Did(s.parse()?))
        } else {
            Ok(ProductId::Product(s.parse()?))
        }
    }
}

impl From<Did> for ProductId {
    fn from(did: Did) -> Self {
        ProductId::Did(did)
    }
}

impl From<ProductRef> for ProductId {
    fn from(product: ProductRef) -> Self {
        ProductId::Product(product)
    }
}
