//! Signed result payloads as compact QR-encodable text:
//! `base64url(payload JSON) "." base64url(HMAC-SHA256(key, payload JSON))`.

use std::fmt::Write as _;
use std::path::Path;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use srta_core::ResultBundle;
use thiserror::Error;

type HmacSha256 = Hmac<Sha256>;

pub const MIN_KEY_BYTES: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QrError {
    #[error("payload is not `<payload>.<mac>`")]
    Shape,
    #[error("payload is not valid base64url")]
    Encoding,
    #[error("signature does not verify")]
    Signature,
    #[error("payload signed with key `{found}`, expected `{expected}`")]
    KeyId { expected: String, found: String },
    #[error("payload body is not a signed result: {0}")]
    Body(String),
}

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("signing key must be at least {MIN_KEY_BYTES} bytes, found {0}")]
    Short(usize),
    #[error("signing key file must hold hex digits")]
    Hex,
    #[error("signing key io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct SigningKey {
    id: String,
    secret: Vec<u8>,
}

impl std::fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigningKey")
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn from_hex(s: &str) -> Result<Vec<u8>, KeyError> {
    if !s.len().is_multiple_of(2) || !s.is_ascii() {
        return Err(KeyError::Hex);
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| KeyError::Hex))
        .collect()
}

impl SigningKey {
    /// The key id is the first four bytes of SHA-256(secret), in hex.
    pub fn new(secret: Vec<u8>) -> Result<SigningKey, KeyError> {
        if secret.len() < MIN_KEY_BYTES {
            return Err(KeyError::Short(secret.len()));
        }
        let id = to_hex(&Sha256::digest(&secret)[..4]);
        Ok(SigningKey { id, secret })
    }

    pub fn generate() -> SigningKey {
        let secret: [u8; MIN_KEY_BYTES] = rand::random();
        SigningKey::new(secret.to_vec()).expect("generated key has full length")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn to_hex(&self) -> String {
        to_hex(&self.secret)
    }

    /// Reads a hex key file, creating it with a fresh key when absent.
    pub fn load_or_create(path: &Path) -> Result<SigningKey, KeyError> {
        match std::fs::read_to_string(path) {
            Ok(s) => SigningKey::new(from_hex(s.trim())?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                let key = SigningKey::generate();
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(path, key.to_hex() + "\n")?;
                Ok(key)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.secret).expect("HMAC accepts any key length")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignedResultPayload {
    pub result: ResultBundle,
    /// Milliseconds since the Unix epoch.
    pub issued_at: u64,
    pub key_id: String,
}

/// Signs `result`; the MAC covers the exact payload bytes that are encoded.
pub fn sign(key: &SigningKey, result: &ResultBundle, issued_at: u64) -> String {
    let payload = SignedResultPayload {
        result: result.clone(),
        issued_at,
        key_id: key.id.clone(),
    };
    let body = serde_json::to_vec(&payload).expect("payload serializes");
    let mut mac = key.mac();
    mac.update(&body);
    let tag = mac.finalize().into_bytes();
    format!("{}.{}", URL_SAFE_NO_PAD.encode(&body), URL_SAFE_NO_PAD.encode(tag))
}

/// Checks the MAC before parsing anything, then the key id.
pub fn verify(key: &SigningKey, text: &str) -> Result<SignedResultPayload, QrError> {
    let (body, tag) = text.split_once('.').ok_or(QrError::Shape)?;
    let body = URL_SAFE_NO_PAD.decode(body).map_err(|_| QrError::Encoding)?;
    let tag = URL_SAFE_NO_PAD.decode(tag).map_err(|_| QrError::Encoding)?;
    let mut mac = key.mac();
    mac.update(&body);
    mac.verify_slice(&tag).map_err(|_| QrError::Signature)?;
    let payload: SignedResultPayload = serde_json::from_slice(&body).map_err(|e| QrError::Body(e.to_string()))?;
    if payload.key_id != key.id {
        return Err(QrError::KeyId {
            expected: key.id.clone(),
            found: payload.key_id,
        });
    }
    Ok(payload)
}
