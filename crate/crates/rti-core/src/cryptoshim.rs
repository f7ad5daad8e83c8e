//! Hashing, signatures, and simulated group credentials.
//!
//! Hashing is SHA-256. Signatures are Ed25519, which is deterministic:
//! the same key and message always produce the same bytes, so transcripts
//! replay bit-exactly. Signing covers the SHA-256 digest of the message
//! rather than the message itself, and verification takes the *expected*
//! message from the verifier's own state; a signature therefore never has
//! to reveal what was signed.
//!
//! Group credentials are simulated: every root of trust holds a session
//! key whose public half is signed by a shared group master key. A
//! credential proves "issued to some legitimate RoT" and nothing else, so
//! verifiers cannot tell group members apart by their credentials. This
//! stands in for a real group signature scheme, whose anonymity property
//! is exactly what makes the identification problem hard.

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand::Rng;
use sha2::{Digest as _, Sha256};
use std::fmt;
use thiserror::Error;

pub const DIGEST_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_ALG: &str = "ed25519";

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("key file must start with an alg=<name> header line")]
    MissingAlgHeader,
    #[error("unsupported algorithm {0:?}")]
    UnsupportedAlg(String),
    #[error("key file body is not valid lowercase hex")]
    BadKeyHex,
    #[error("{what} must be {expected} bytes, got {got}")]
    BadLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("byte string is not a valid ed25519 public key")]
    BadPublicKey,
}

/// A 256-bit digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashDigest(pub [u8; DIGEST_LEN]);

impl HashDigest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<HashDigest, CryptoError> {
        if s.len() != 2 * DIGEST_LEN || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(CryptoError::BadKeyHex);
        }
        let bytes = hex::decode(s).map_err(|_| CryptoError::BadKeyHex)?;
        let arr: [u8; DIGEST_LEN] = bytes.try_into().expect("length checked");
        Ok(HashDigest(arr))
    }
}

impl fmt::Display for HashDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// SHA-256.
pub fn hash(data: &[u8]) -> HashDigest {
    HashDigest(Sha256::digest(data).into())
}

/// An opaque signature. Always [`SIGNATURE_LEN`] bytes for the current
/// algorithm, but treated as a byte string everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature(Vec<u8>);

impl Signature {
    /// The abort sentinel: what a prover sends in place of a signature
    /// when it cannot recover the challenge. Never verifies.
    pub fn abort_sentinel() -> Signature {
        Signature(vec![0; SIGNATURE_LEN])
    }

    pub fn from_bytes(bytes: &[u8]) -> Signature {
        Signature(bytes.to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// An Ed25519 verifying key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicKey([u8; PUBLIC_KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: &[u8]) -> Result<PublicKey, CryptoError> {
        let arr: [u8; PUBLIC_KEY_LEN] =
            bytes.try_into().map_err(|_| CryptoError::BadLength {
                what: "public key",
                expected: PUBLIC_KEY_LEN,
                got: bytes.len(),
            })?;
        VerifyingKey::from_bytes(&arr).map_err(|_| CryptoError::BadPublicKey)?;
        Ok(PublicKey(arr))
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.0
    }

    fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey::from_bytes(&self.0).expect("validated at construction")
    }
}

/// An Ed25519 signing key.
#[derive(Clone)]
pub struct SecretKey(SigningKey);

impl SecretKey {
    pub fn generate(rng: &mut impl Rng) -> SecretKey {
        let mut seed = [0u8; 32];
        rng.fill(&mut seed);
        SecretKey(SigningKey::from_bytes(&seed))
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.0.verifying_key().to_bytes())
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SecretKey, CryptoError> {
        let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::BadLength {
            what: "secret key",
            expected: 32,
            got: bytes.len(),
        })?;
        Ok(SecretKey(SigningKey::from_bytes(&arr)))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({})", self.public_key())
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Sign the SHA-256 digest of `message`. Deterministic.
pub fn sign(sk: &SecretKey, message: &[u8]) -> Signature {
    let digest = hash(message);
    Signature(sk.0.sign(digest.as_bytes()).to_bytes().to_vec())
}

/// Check `sig` against the message the verifier expects. Returns false
/// for any malformed or mismatching signature, including the abort
/// sentinel.
pub fn verify(pk: &PublicKey, sig: &Signature, expected_message: &[u8]) -> bool {
    let Ok(raw): Result<&[u8; SIGNATURE_LEN], _> = sig.0.as_slice().try_into() else {
        return false;
    };
    let sig = ed25519_dalek::Signature::from_bytes(raw);
    let digest = hash(expected_message);
    pk.verifying_key().verify(digest.as_bytes(), &sig).is_ok()
}

/// The group master key pair. Its public half is what verifiers use to
/// check that a session key belongs to *some* legitimate RoT.
#[derive(Debug, Clone)]
pub struct GroupMaster {
    sk: SecretKey,
    pub pk: PublicKey,
}

impl GroupMaster {
    pub fn generate(rng: &mut impl Rng) -> GroupMaster {
        let sk = SecretKey::generate(rng);
        let pk = sk.public_key();
        GroupMaster { sk, pk }
    }

    pub fn secret(&self) -> &SecretKey {
        &self.sk
    }
}

/// A RoT's per-session key material: a fresh signing key plus the group
/// credential over its public half.
#[derive(Debug, Clone)]
pub struct SessionKeyPair {
    pub pk: PublicKey,
    sk: SecretKey,
    pub group_cred: Signature,
}

impl SessionKeyPair {
    pub fn secret(&self) -> &SecretKey {
        &self.sk
    }
}

/// Generate a session key pair and certify it under the group master
/// key. The credential binds the key to the *group*, not to a device:
/// two devices' credentials differ only because their keys do.
pub fn rot_gen_keys(group_master_sk: &SecretKey, rng: &mut impl Rng) -> SessionKeyPair {
    let sk = SecretKey::generate(rng);
    let pk = sk.public_key();
    let group_cred = sign(group_master_sk, pk.as_bytes());
    SessionKeyPair { pk, sk, group_cred }
}

/// Does `cred` certify `pk` as a group member under `group_master_pk`?
pub fn group_verify(group_master_pk: &PublicKey, pk: &PublicKey, cred: &Signature) -> bool {
    verify(group_master_pk, cred, pk.as_bytes())
}

/// Key file form: a one-line `alg=<name>` header followed by the key as
/// lowercase hex.
pub fn encode_key_file(key_bytes: &[u8]) -> String {
    format!("alg={SIGNATURE_ALG}\n{}\n", hex::encode(key_bytes))
}

pub fn decode_key_file(text: &str) -> Result<Vec<u8>, CryptoError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(CryptoError::MissingAlgHeader)?;
    let alg = header
        .strip_prefix("alg=")
        .ok_or(CryptoError::MissingAlgHeader)?;
    if alg != SIGNATURE_ALG {
        return Err(CryptoError::UnsupportedAlg(alg.to_string()));
    }
    let body = lines.next().ok_or(CryptoError::BadKeyHex)?;
    if body.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(CryptoError::BadKeyHex);
    }
    hex::decode(body).map_err(|_| CryptoError::BadKeyHex)
}
