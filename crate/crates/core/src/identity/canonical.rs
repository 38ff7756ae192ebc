//! Canonical byte encoding of document trees.
//!
//! The encoding is compact JSON with object keys sorted by their UTF-8 bytes.
//! Only integers are accepted as numbers: decimal quantities travel as
//! strings, so the same logical value can never render two ways.

use serde::Serialize;
use serde_json::Value;

use super::keys::{sha256, Digest256};
use super::IdentityError;

pub fn canonicalize(value: &Value) -> Result<Vec<u8>, IdentityError> {
    let mut out = Vec::with_capacity(128);
    write_value(value, &mut out)?;
    Ok(out)
}

fn write_value(value: &Value, out: &mut Vec<u8>) -> Result<(), IdentityError> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else {
                return Err(IdentityError::UnsupportedScalar(format!("floating-point number {n}")));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out)?;
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
            out.push(b'{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(key, out);
                out.push(b':');
                write_value(&map[key], out)?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    // serde_json's string escaping is fixed: short escapes for \" \\ \n \r \t
    // \b \f, \u00XX for other controls, raw UTF-8 otherwise
    serde_json::to_writer(out, s).expect("writing a string to a Vec cannot fail");
}

pub fn to_canonical_value<T: Serialize + ?Sized>(value: &T) -> Result<Value, IdentityError> {
    serde_json::to_value(value).map_err(|e| IdentityError::Encoding(e.to_string()))
}

pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, IdentityError> {
    canonicalize(&to_canonical_value(value)?)
}

/// SHA-256 of the canonical encoding.
pub fn digest_of<T: Serialize + ?Sized>(value: &T) -> Result<Digest256, IdentityError> {
    Ok(sha256(&to_canonical(value)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn key_order_independent() {
        let a: Value = serde_json::from_str(r#"{"b":1,"a":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a":2,"b":1}"#).unwrap();
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
        assert_eq!(canonicalize(&a).unwrap(), br#"{"a":2,"b":1}"#);
    }

    #[test]
    fn empty_map_is_two_bytes() {
        assert_eq!(canonicalize(&json!({})).unwrap(), b"{}");
        assert_eq!(canonicalize(&json!([])).unwrap(), b"[]");
    }

    #[test]
    fn nested_matches_golden_file() {
        let fixture = json!({
            "z": [1, {"b": true, "a": null}],
            "a": "x\"y",
            "m": {"é": -3, "e": "ü", "n": u64::MAX}
        });
        let golden = include_bytes!("../../fixtures/canonical_nested.golden");
        let golden = golden.strip_suffix(b"\n").unwrap_or(golden);
        assert_eq!(canonicalize(&fixture).unwrap(), golden);
    }

    #[test]
    fn floats_are_rejected() {
        assert!(matches!(canonicalize(&json!({"x": 1.5})), Err(IdentityError::UnsupportedScalar(_))));
    }

    #[test]
    fn control_characters_escaped() {
        assert_eq!(canonicalize(&json!("a\nb\u{1}")).unwrap(), br#""a\nb\u0001""#);
    }

    #[test]
    fn distinct_fixtures_distinct_bytes() {
        let corpus = [
            json!(null),
            json!(0),
            json!("0"),
            json!([0]),
            json!({"0": 0}),
            json!({"0": "0"}),
            json!([[]]),
            json!([{}]),
            json!({"a": [1, 2]}),
            json!({"a": [2, 1]}),
            json!(-1),
            json!(true),
            json!("true"),
        ];
        let encoded: Vec<_> = corpus.iter().map(|v| canonicalize(v).unwrap()).collect();
        for i in 0..encoded.len() {
            for j in (i + 1)..encoded.len() {
                assert_ne!(encoded[i], encoded[j], "{} vs {}", corpus[i], corpus[j]);
            }
        }
    }
}
