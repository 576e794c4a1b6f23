//! Input and output variable contexts.
//!
//! A context maps variable names to labelled scalars or vectors. Encrypted
//! variables travel as per-element [`SealedEnvelope`]s; names, labels, kinds
//! and vector lengths stay readable without any key.

mod envelope;
mod format;
mod key;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::checker::{Kind, Label, Signature, VarType};

pub use envelope::{
    seal_value, unseal_value, EnvelopeError, SealedEnvelope, ENVELOPE_LEN, ENVELOPE_VERSION,
    NONCE_LEN,
};
pub use format::{load_context, save_context, FormatError};
pub use key::{keygen, ContextKey, KeyError, KeyId, KEY_LEN};

pub const CONTEXT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarData {
    /// Plain integers. Always the case for clear variables; for encrypted
    /// variables this is the unsealed authoring form.
    Plain(Vec<i64>),
    /// One envelope per element, plus the ciphertext noise budget carried
    /// over from a previous evaluation.
    Sealed {
        envelopes: Vec<SealedEnvelope>,
        noise_budget: Option<u32>,
    },
}

impl VarData {
    pub fn len(&self) -> usize {
        match self {
            VarData::Plain(v) => v.len(),
            VarData::Sealed { envelopes, .. } => envelopes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextVar {
    pub label: Label,
    pub kind: Kind,
    pub data: VarData,
}

impl ContextVar {
    pub fn clear_scalar(v: i64) -> Self {
        ContextVar {
            label: Label::Clear,
            kind: Kind::Scalar,
            data: VarData::Plain(vec![v]),
        }
    }

    pub fn clear_vector(v: Vec<i64>) -> Self {
        ContextVar {
            label: Label::Clear,
            kind: Kind::Vector,
            data: VarData::Plain(v),
        }
    }

    /// Encrypted-labelled scalar in unsealed form.
    pub fn secret_scalar(v: i64) -> Self {
        ContextVar {
            label: Label::Encrypted,
            ..ContextVar::clear_scalar(v)
        }
    }

    /// Encrypted-labelled vector in unsealed form.
    pub fn secret_vector(v: Vec<i64>) -> Self {
        ContextVar {
            label: Label::Encrypted,
            ..ContextVar::clear_vector(v)
        }
    }

    pub fn var_type(&self) -> VarType {
        VarType::new(self.label, self.kind)
    }

    pub fn is_sealed(&self) -> bool {
        matches!(self.data, VarData::Sealed { .. })
    }

    /// Number of elements; public metadata for every label.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("AUTH_FAILURE: envelope {index} of `{name}` failed authentication")]
    AuthFailure { name: String, index: u32 },
    #[error("KEY_MISMATCH: context sealed under key {found}, but key {expected} was supplied")]
    KeyMismatch { expected: KeyId, found: KeyId },
    #[error("a key is required to open encrypted variable `{0}`")]
    MissingKey(String),
    #[error("encrypted variable `{0}` is not sealed")]
    NotSealed(String),
}

/// Decrypted view of a variable, used to compare outputs across backends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Revealed {
    Scalar(i64),
    Vector(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub version: u32,
    pub key_id: Option<KeyId>,
    pub variables: BTreeMap<String, ContextVar>,
}

impl Default for Context {
    fn default() -> Self {
        Context::new()
    }
}

impl Context {
    pub fn new() -> Self {
        Context {
            version: CONTEXT_VERSION,
            key_id: None,
            variables: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, var: ContextVar) -> Self {
        self.variables.insert(name.into(), var);
        self
    }

    pub fn get(&self, name: &str) -> Option<&ContextVar> {
        self.variables.get(name)
    }

    pub fn derive_signature(&self) -> Signature {
        Signature(
            self.variables
                .iter()
                .map(|(n, v)| (n.clone(), v.var_type()))
                .collect(),
        )
    }

    pub fn has_sealed(&self) -> bool {
        self.variables.values().any(ContextVar::is_sealed)
    }

    /// Fails when the context records a different key than `key`.
    pub fn check_key(&self, key: &ContextKey) -> Result<(), ContextError> {
        match self.key_id {
            Some(found) if found != key.id() => Err(ContextError::KeyMismatch {
                expected: key.id(),
                found,
            }),
            _ => Ok(()),
        }
    }

    /// Seals every encrypted variable still in plain form.
    pub fn seal(&self, key: &ContextKey) -> Result<Context, ContextError> {
        self.check_key(key)?;
        let mut out = self.clone();
        for (name, var) in out.variables.iter_mut() {
            if let (Label::Encrypted, VarData::Plain(values)) = (var.label, &var.data) {
                let envelopes = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| seal_value(key, name, i as u32, *v))
                    .collect();
                var.data = VarData::Sealed {
                    envelopes,
                    noise_budget: None,
                };
            }
        }
        if out.has_sealed() {
            out.key_id = Some(key.id());
        }
        Ok(out)
    }

    /// Opens every sealed variable, keeping its encrypted label.
    pub fn unseal(&self, key: &ContextKey) -> Result<Context, ContextError> {
        self.check_key(key)?;
        let mut out = self.clone();
        for (name, var) in out.variables.iter_mut() {
            if let VarData::Sealed { envelopes, .. } = &var.data {
                var.data = VarData::Plain(open_all(key, name, envelopes)?);
            }
        }
        out.key_id = None;
        Ok(out)
    }

    /// Plain values of every variable, opening envelopes with `key`.
    pub fn reveal(&self, key: Option<&ContextKey>) -> Result<BTreeMap<String, Revealed>, ContextError> {
        if let Some(key) = key {
            self.check_key(key)?;
        }
        self.variables
            .iter()
            .map(|(name, var)| {
                let values = match &var.data {
                    VarData::Plain(v) => v.clone(),
                    VarData::Sealed { envelopes, .. } => {
                        let key = key.ok_or_else(|| ContextError::MissingKey(name.clone()))?;
                        open_all(key, name, envelopes)?
                    }
                };
                let revealed = match var.kind {
                    Kind::Scalar => Revealed::Scalar(values[0]),
                    Kind::Vector => Revealed::Vector(values),
                };
                Ok((name.clone(), revealed))
            })
            .collect()
    }

    /// Keeps only the named variables.
    pub fn retain_only<S: AsRef<str>>(&mut self, names: &[S]) {
        self.variables
            .retain(|n, _| names.iter().any(|keep| keep.as_ref() == n));
        if !self.has_sealed() {
            self.key_id = None;
        }
    }
}

pub(crate) fn open_all(
    key: &ContextKey,
    name: &str,
    envelopes: &[SealedEnvelope],
) -> Result<Vec<i64>, ContextError> {
    envelopes
        .iter()
        .enumerate()
        .map(|(i, env)| {
            unseal_value(key, name, i as u32, env).map_err(|_| ContextError::AuthFailure {
                name: name.to_string(),
                index: i as u32,
            })
        })
        .collect()
}
