use std::fmt;
use std::str::FromStr;

use aes_gcm::aead::rand_core::RngCore;
use aes_gcm::aead::OsRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const KEY_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key file must hold {} hex characters, found {0}", KEY_LEN * 2)]
    Length(usize),
    #[error("key file is not valid hex")]
    Hex,
    #[error("key id must be 16 hex characters")]
    BadKeyId,
}

/// First eight bytes of the SHA-256 digest of a context key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyId(pub [u8; 8]);

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId({self})")
    }
}

impl FromStr for KeyId {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut id = [0u8; 8];
        hex::decode_to_slice(s, &mut id).map_err(|_| KeyError::BadKeyId)?;
        Ok(KeyId(id))
    }
}

impl Serialize for KeyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KeyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 256-bit symmetric key shared by the context producer and the interpreter.
#[derive(Clone, PartialEq, Eq)]
pub struct ContextKey {
    bytes: [u8; KEY_LEN],
}

impl fmt::Debug for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContextKey(id={})", self.id())
    }
}

impl ContextKey {
    pub fn generate() -> Self {
        let mut bytes = [0u8; KEY_LEN];
        OsRng.fill_bytes(&mut bytes);
        ContextKey { bytes }
    }

    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        ContextKey { bytes }
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.bytes
    }

    pub fn id(&self) -> KeyId {
        let digest = Sha256::digest(self.bytes);
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[..8]);
        KeyId(id)
    }

    /// Key file contents: 64 hex characters and a newline.
    pub fn to_key_file(&self) -> String {
        format!("{}\n", hex::encode(self.bytes))
    }

    pub fn from_key_file(text: &str) -> Result<Self, KeyError> {
        let trimmed = text
            .strip_suffix('\n')
            .map(|t| t.strip_suffix('\r').unwrap_or(t))
            .unwrap_or(text);
        if trimmed.len() != KEY_LEN * 2 {
            return Err(KeyError::Length(trimmed.len()));
        }
        let mut bytes = [0u8; KEY_LEN];
        hex::decode_to_slice(trimmed, &mut bytes).map_err(|_| KeyError::Hex)?;
        Ok(ContextKey { bytes })
    }
}

/// Generates a fresh key.
pub fn keygen() -> ContextKey {
    ContextKey::generate()
}
