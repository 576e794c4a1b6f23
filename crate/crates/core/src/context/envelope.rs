use aes_gcm::aead::{Aead, AeadCore, KeyInit, OsRng, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use thiserror::Error;

use super::key::ContextKey;

/// Leading byte of every envelope's associated data.
pub const ENVELOPE_VERSION: u8 = 1;
pub const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;
/// Sealed 8-byte payload plus the authentication tag.
pub const CIPHERTEXT_LEN: usize = 8 + TAG_LEN;
pub const ENVELOPE_LEN: usize = NONCE_LEN + CIPHERTEXT_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("authentication failed")]
    AuthFailure,
    #[error("envelope must be {ENVELOPE_LEN} bytes, found {0}")]
    Length(usize),
    #[error("envelope is not valid base64")]
    Base64,
}

/// AES-256-GCM encryption of one 64-bit integer, bound to the variable name
/// and element index it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedEnvelope {
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: [u8; CIPHERTEXT_LEN],
}

impl SealedEnvelope {
    pub fn to_bytes(&self) -> [u8; ENVELOPE_LEN] {
        let mut out = [0u8; ENVELOPE_LEN];
        out[..NONCE_LEN].copy_from_slice(&self.nonce);
        out[NONCE_LEN..].copy_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        if bytes.len() != ENVELOPE_LEN {
            return Err(EnvelopeError::Length(bytes.len()));
        }
        let mut nonce = [0u8; NONCE_LEN];
        let mut ciphertext = [0u8; CIPHERTEXT_LEN];
        nonce.copy_from_slice(&bytes[..NONCE_LEN]);
        ciphertext.copy_from_slice(&bytes[NONCE_LEN..]);
        Ok(SealedEnvelope { nonce, ciphertext })
    }

    pub fn to_base64(&self) -> String {
        STANDARD.encode(self.to_bytes())
    }

    pub fn from_base64(text: &str) -> Result<Self, EnvelopeError> {
        let bytes = STANDARD.decode(text).map_err(|_| EnvelopeError::Base64)?;
        SealedEnvelope::from_bytes(&bytes)
    }
}

/// `version ‖ name ‖ index (big-endian u32)`.
fn associated_data(name: &str, index: u32) -> Vec<u8> {
    let mut aad = Vec::with_capacity(1 + name.len() + 4);
    aad.push(ENVELOPE_VERSION);
    aad.extend_from_slice(name.as_bytes());
    aad.extend_from_slice(&index.to_be_bytes());
    aad
}

fn cipher(key: &ContextKey) -> Aes256Gcm {
    Aes256Gcm::new(key.as_bytes().into())
}

pub fn seal_value(key: &ContextKey, name: &str, index: u32, value: i64) -> SealedEnvelope {
    let nonce = Aes256Gcm::generate_nonce(&mut OsRng);
    let aad = associated_data(name, index);
    let sealed = cipher(key)
        .encrypt(
            &nonce,
            Payload {
                msg: &value.to_le_bytes(),
                aad: &aad,
            },
        )
        .expect("AES-GCM encryption of 8 bytes cannot fail");
    let mut ciphertext = [0u8; CIPHERTEXT_LEN];
    ciphertext.copy_from_slice(&sealed);
    SealedEnvelope {
        nonce: nonce.into(),
        ciphertext,
    }
}

pub fn unseal_value(
    key: &ContextKey,
    name: &str,
    index: u32,
    envelope: &SealedEnvelope,
) -> Result<i64, EnvelopeError> {
    let aad = associated_data(name, index);
    let plain = cipher(key)
        .decrypt(
            Nonce::from_slice(&envelope.nonce),
            Payload {
                msg: &envelope.ciphertext,
                aad: &aad,
            },
        )
        .map_err(|_| EnvelopeError::AuthFailure)?;
    let bytes: [u8; 8] = plain
        .as_slice()
        .try_into()
        .map_err(|_| EnvelopeError::AuthFailure)?;
    Ok(i64::from_le_bytes(bytes))
}
