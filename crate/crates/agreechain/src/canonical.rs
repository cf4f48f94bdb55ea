//! Canonical JSON encoding for everything that gets hashed or signed.
//!
//! Rules: UTF-8, no insignificant whitespace, object keys in lexicographic
//! (byte) order, and integers only — floating-point numbers are rejected so
//! that every digest is reproducible across languages and platforms.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CanonicalError;

/// Serialize a value to its canonical JSON string.
pub fn to_canonical_string(value: &serde_json::Value) -> Result<String, CanonicalError> {
    let mut out = String::new();
    write_value(value, &mut out)?;
    Ok(out)
}

/// Canonical JSON bytes of any `Serialize` type.
pub fn canonical_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let v = serde_json::to_value(value).map_err(|e| CanonicalError::Serialize(e.to_string()))?;
    Ok(to_canonical_string(&v)?.into_bytes())
}

/// SHA-256 over the canonical encoding of a value.
pub fn canonical_digest<T: Serialize>(value: &T) -> Result<[u8; 32], CanonicalError> {
    Ok(sha256(&canonical_bytes(value)?))
}

/// Plain SHA-256.
pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().into()
}

fn write_value(value: &serde_json::Value, out: &mut String) -> Result<(), CanonicalError> {
    match value {
        serde_json::Value::Null => out.push_str("null"),
        serde_json::Value::Bool(true) => out.push_str("true"),
        serde_json::Value::Bool(false) => out.push_str("false"),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                return Err(CanonicalError::NonIntegerNumber(n.to_string()));
            }
        }
        serde_json::Value::String(s) => {
            // serde_json's string escaping is deterministic.
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
        }
        serde_json::Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out)?;
            }
            out.push(']');
        }
        serde_json::Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string serialization is infallible"));
                out.push(':');
                write_value(&map[key.as_str()], out)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_compact() {
        let v = json!({"zebra": 1, "alpha": {"y": [1, 2], "x": "s"}});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            r#"{"alpha":{"x":"s","y":[1,2]},"zebra":1}"#
        );
    }

    #[test]
    fn floats_are_rejected() {
        let v = json!({"p": 0.5});
        assert!(matches!(
            to_canonical_string(&v),
            Err(CanonicalError::NonIntegerNumber(_))
        ));
    }

    #[test]
    fn negative_and_large_integers_roundtrip() {
        let v = json!({"a": -7, "b": u64::MAX});
        assert_eq!(
            to_canonical_string(&v).unwrap(),
            format!(r#"{{"a":-7,"b":{}}}"#, u64::MAX)
        );
    }

    #[test]
    fn digest_is_stable() {
        let a = json!({"b": 2, "a": 1});
        let b = json!({"a": 1, "b": 2});
        assert_eq!(canonical_digest(&a).unwrap(), canonical_digest(&b).unwrap());
    }
}
