//! Ed25519 signing and strict hex handling.
//!
//! All signatures are detached Ed25519 signatures over a 32-byte SHA-256
//! digest of canonical content. Hex is always lowercase; decoding rejects
//! anything else so that persisted encodings have exactly one valid form.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};

pub const SEED_LEN: usize = 32;
pub const KEY_LEN: usize = 32;
pub const SIG_LEN: usize = 64;

/// Derive a signing key from a 32-byte seed.
pub fn signing_key_from_seed(seed: &[u8; SEED_LEN]) -> SigningKey {
    SigningKey::from_bytes(seed)
}

/// Sign a 32-byte digest, returning the detached 64-byte signature.
pub fn sign_digest(key: &SigningKey, digest: &[u8; 32]) -> [u8; SIG_LEN] {
    key.sign(digest).to_bytes()
}

/// Verify a detached signature over a 32-byte digest.
pub fn verify_digest(key: &VerifyingKey, digest: &[u8; 32], signature: &[u8; SIG_LEN]) -> bool {
    key.verify(digest, &Signature::from_bytes(signature)).is_ok()
}

/// Parse a 32-byte verifying key from raw bytes.
pub fn verifying_key_from_bytes(bytes: &[u8; KEY_LEN]) -> Option<VerifyingKey> {
    VerifyingKey::from_bytes(bytes).ok()
}

/// Encode bytes as lowercase hex.
pub fn to_hex(bytes: &[u8]) -> String {
    hex::encode(bytes)
}

/// Decode an exact-length, strictly lowercase hex string.
///
/// The `hex` crate accepts mixed case, which would give tampered encodings a
/// second valid spelling; this wrapper does not.
pub fn from_hex_exact<const N: usize>(s: &str) -> Option<[u8; N]> {
    if s.len() != 2 * N || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).ok()?;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> SigningKey {
        signing_key_from_seed(&[7u8; 32])
    }

    #[test]
    fn sign_verify_roundtrip() {
        let sk = key();
        let digest = crate::canonical::sha256(b"payload");
        let sig = sign_digest(&sk, &digest);
        assert!(verify_digest(&sk.verifying_key(), &digest, &sig));
    }

    #[test]
    fn wrong_key_fails() {
        let sk = key();
        let other = signing_key_from_seed(&[8u8; 32]);
        let digest = crate::canonical::sha256(b"payload");
        let sig = sign_digest(&sk, &digest);
        assert!(!verify_digest(&other.verifying_key(), &digest, &sig));
    }

    #[test]
    fn hex_rejects_uppercase_and_bad_length() {
        assert!(from_hex_exact::<2>("0aff").is_some());
        assert!(from_hex_exact::<2>("0AFF").is_none());
        assert!(from_hex_exact::<2>("0af").is_none());
        assert!(from_hex_exact::<2>("0afg").is_none());
        assert!(from_hex_exact::<2>("0aff0a").is_none());
    }
}
