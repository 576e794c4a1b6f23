use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::backends::cost::{CostTable, OpCounts};
use crate::checker::Label;
use crate::context::{ContextError, ContextKey, ContextVar, KeyId};
use crate::syntax::BinOp;

/// Runtime datum. `C` is the backend's ciphertext type.
#[derive(Debug, Clone, PartialEq)]
pub enum Value<C> {
    ClearInt(i64),
    ClearBool(bool),
    ClearVec(Rc<[i64]>),
    Cipher(C),
    CipherVec(Rc<[C]>),
    /// Encrypted 0/1; usable only as an if-else condition.
    CipherBool(C),
}

impl<C> Value<C> {
    pub fn label(&self) -> Label {
        match self {
            Value::ClearInt(_) | Value::ClearBool(_) | Value::ClearVec(_) => Label::Clear,
            Value::Cipher(_) | Value::CipherVec(_) | Value::CipherBool(_) => Label::Encrypted,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Value::ClearInt(_) => "clear integer",
            Value::ClearBool(_) => "clear boolean",
            Value::ClearVec(_) => "clear vector",
            Value::Cipher(_) => "encrypted integer",
            Value::CipherVec(_) => "encrypted vector",
            Value::CipherBool(_) => "encrypted boolean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("noise budget exhausted: operation needs {needed}, {available} left")]
    NoiseExhausted { needed: u32, available: u32 },
    #[error("ciphertexts under different keys ({0} and {1})")]
    KeyMismatch(KeyId, KeyId),
    #[error("{0}")]
    Capability(String),
}

impl AlgebraError {
    pub fn code(&self) -> &'static str {
        match self {
            AlgebraError::NoiseExhausted { .. } => "NOISE_EXHAUSTED",
            AlgebraError::KeyMismatch(..) => "KEY_MISMATCH",
            AlgebraError::Capability(_) => "CAPABILITY",
        }
    }
}

pub type AlgebraResult<T> = Result<T, AlgebraError>;

/// Primitive operations a backend provides to the evaluator.
///
/// The evaluator performs clear×clear arithmetic itself and only calls the
/// algebra once at least one operand is encrypted, after promoting the clear
/// side through [`encrypt_clear`](ValueAlgebra::encrypt_clear) (or using the
/// cheaper `*_clear` forms). Each call records its own operation count.
pub trait ValueAlgebra {
    type Cipher: Clone + fmt::Debug + PartialEq;

    fn name(&self) -> &'static str;

    fn cost_table(&self) -> &CostTable;

    fn counts(&self) -> &OpCounts;

    fn counts_mut(&mut self) -> &mut OpCounts;

    /// Key used to open input envelopes, if this backend uses one.
    fn key(&self) -> Option<&ContextKey>;

    /// Converts an input context variable into a runtime value.
    fn import(&mut self, name: &str, var: &ContextVar) -> Result<Value<Self::Cipher>, ContextError>;

    /// Converts an encrypted runtime integer vector (or scalar, as a
    /// one-element slice) into an output context variable.
    fn export_encrypted(&mut self, name: &str, values: &[Self::Cipher], vector: bool) -> ContextVar;

    /// Plaintext behind a ciphertext; test and diagnostics helper.
    fn decrypt(&self, c: &Self::Cipher) -> i64;

    fn encrypt_clear(&mut self, v: i64) -> AlgebraResult<Self::Cipher>;
    fn add(&mut self, a: &Self::Cipher, b: &Self::Cipher) -> AlgebraResult<Self::Cipher>;
    fn sub(&mut self, a: &Self::Cipher, b: &Self::Cipher) -> AlgebraResult<Self::Cipher>;
    fn mul(&mut self, a: &Self::Cipher, b: &Self::Cipher) -> AlgebraResult<Self::Cipher>;
    fn mul_clear(&mut self, a: &Self::Cipher, k: i64) -> AlgebraResult<Self::Cipher>;
    /// `divisor` is non-zero; the evaluator reports division by zero itself.
    fn div_clear(&mut self, a: &Self::Cipher, divisor: i64) -> AlgebraResult<Self::Cipher>;
    /// Returns an encrypted 0/1.
    fn cmp(&mut self, op: BinOp, a: &Self::Cipher, b: &Self::Cipher) -> AlgebraResult<Self::Cipher>;
    /// `cond ? a : b` for an encrypted 0/1 condition.
    fn mux(
        &mut self,
        cond: &Self::Cipher,
        a: &Self::Cipher,
        b: &Self::Cipher,
    ) -> AlgebraResult<Self::Cipher>;

    fn div(&mut self, _a: &Self::Cipher, _b: &Self::Cipher) -> AlgebraResult<Self::Cipher> {
        Err(AlgebraError::Capability(
            "division by an encrypted divisor".into(),
        ))
    }

    /// Key id to record on output contexts holding sealed variables.
    fn output_key_id(&self) -> Option<KeyId> {
        self.key().map(ContextKey::id)
    }
}
