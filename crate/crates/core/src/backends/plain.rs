//! Backends that compute on plaintext: the unprotected baseline and the
//! enclave model. Both count every operation in the clear column under the
//! clear cost, so their reports match exactly; they differ only at the
//! context boundary.

use crate::checker::Label;
use crate::context::{
    open_all, seal_value, ContextError, ContextKey, ContextVar, VarData,
};
use crate::engine::{AlgebraResult, Value, ValueAlgebra};
use crate::syntax::BinOp;

use super::cost::{CostTable, OpCounts, Prim};

fn import_plain(
    key: Option<&ContextKey>,
    require_sealed: bool,
    name: &str,
    var: &ContextVar,
) -> Result<Value<i64>, ContextError> {
    let values = match (&var.label, &var.data) {
        (Label::Clear, VarData::Plain(v)) => {
            return Ok(if var.kind == crate::checker::Kind::Scalar {
                Value::ClearInt(v[0])
            } else {
                Value::ClearVec(v.as_slice().into())
            })
        }
        (_, VarData::Plain(_)) if require_sealed => {
            return Err(ContextError::NotSealed(name.to_string()))
        }
        (_, VarData::Plain(v)) => v.clone(),
        (_, VarData::Sealed { envelopes, .. }) => {
            let key = key.ok_or_else(|| ContextError::MissingKey(name.to_string()))?;
            open_all(key, name, envelopes)?
        }
    };
    Ok(match var.kind {
        crate::checker::Kind::Scalar => Value::Cipher(values[0]),
        crate::checker::Kind::Vector => Value::CipherVec(values.into()),
    })
}

macro_rules! plaintext_ops {
    () => {
        fn cost_table(&self) -> &CostTable {
            &self.table
        }

        fn counts(&self) -> &OpCounts {
            &self.counts
        }

        fn counts_mut(&mut self) -> &mut OpCounts {
            &mut self.counts
        }

        fn decrypt(&self, c: &i64) -> i64 {
            *c
        }

        fn encrypt_clear(&mut self, v: i64) -> AlgebraResult<i64> {
            Ok(v)
        }

        fn add(&mut self, a: &i64, b: &i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Add);
            Ok(a.wrapping_add(*b))
        }

        fn sub(&mut self, a: &i64, b: &i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Sub);
            Ok(a.wrapping_sub(*b))
        }

        fn mul(&mut self, a: &i64, b: &i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Mul);
            Ok(a.wrapping_mul(*b))
        }

        fn mul_clear(&mut self, a: &i64, k: i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Mul);
            Ok(a.wrapping_mul(k))
        }

        fn div_clear(&mut self, a: &i64, divisor: i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Div);
            Ok(a.wrapping_div(divisor))
        }

        fn cmp(&mut self, op: BinOp, a: &i64, b: &i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Cmp);
            Ok(op.compare(*a, *b).unwrap_or(false) as i64)
        }

        fn mux(&mut self, cond: &i64, a: &i64, b: &i64) -> AlgebraResult<i64> {
            self.counts.clear.bump(Prim::Mux);
            Ok(if *cond != 0 { *a } else { *b })
        }
    };
}

/// Unprotected baseline. Encrypted-labelled inputs are opened (a key is
/// needed only if they arrive sealed) and encrypted-labelled outputs are
/// written back unsealed.
#[derive(Debug, Clone)]
pub struct ClearAlgebra {
    key: Option<ContextKey>,
    table: CostTable,
    counts: OpCounts,
}

impl ClearAlgebra {
    pub fn new(key: Option<ContextKey>, table: CostTable) -> Self {
        ClearAlgebra {
            key,
            table,
            counts: OpCounts::default(),
        }
    }
}

pub fn clear_algebra() -> ClearAlgebra {
    ClearAlgebra::new(None, CostTable::default())
}

impl ValueAlgebra for ClearAlgebra {
    type Cipher = i64;

    fn name(&self) -> &'static str {
        "clear"
    }

    fn key(&self) -> Option<&ContextKey> {
        self.key.as_ref()
    }

    fn import(&mut self, name: &str, var: &ContextVar) -> Result<Value<i64>, ContextError> {
        import_plain(self.key.as_ref(), false, name, var)
    }

    fn export_encrypted(&mut self, _name: &str, values: &[i64], vector: bool) -> ContextVar {
        if vector {
            ContextVar::secret_vector(values.to_vec())
        } else {
            ContextVar::secret_scalar(values[0])
        }
    }

    fn output_key_id(&self) -> Option<crate::context::KeyId> {
        None
    }

    plaintext_ops!();
}

/// Enclave model: sealed inputs are opened at the boundary, computation runs
/// on plaintext inside, and encrypted outputs are sealed again.
#[derive(Debug, Clone)]
pub struct TeeAlgebra {
    key: ContextKey,
    table: CostTable,
    counts: OpCounts,
}

impl TeeAlgebra {
    pub fn new(sealing_key: ContextKey, table: CostTable) -> Self {
        TeeAlgebra {
            key: sealing_key,
            table,
            counts: OpCounts::default(),
        }
    }
}

pub fn tee_sim_algebra(sealing_key: ContextKey) -> TeeAlgebra {
    TeeAlgebra::new(sealing_key, CostTable::default())
}

impl ValueAlgebra for TeeAlgebra {
    type Cipher = i64;

    fn name(&self) -> &'static str {
        "tee-sim"
    }

    fn key(&self) -> Option<&ContextKey> {
        Some(&self.key)
    }

    fn import(&mut self, name: &str, var: &ContextVar) -> Result<Value<i64>, ContextError> {
        import_plain(Some(&self.key), true, name, var)
    }

    fn export_encrypted(&mut self, name: &str, values: &[i64], vector: bool) -> ContextVar {
        let envelopes = values
            .iter()
            .enumerate()
            .map(|(i, v)| seal_value(&self.key, name, i as u32, *v))
            .collect();
        ContextVar {
            label: Label::Encrypted,
            kind: if vector {
                crate::checker::Kind::Vector
            } else {
                crate::checker::Kind::Scalar
            },
            data: VarData::Sealed {
                envelopes,
                noise_budget: None,
            },
        }
    }

    plaintext_ops!();
}
