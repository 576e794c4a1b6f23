//! Simulated FHE backend.
//!
//! A [`SimCipher`] holds its plaintext alongside a noise budget and the id of
//! the key it was produced under. Every homomorphic operation charges noise
//! from the cost table against the smallest input budget; a result that
//! would drop below zero is refused, standing in for the point where a real
//! scheme would need bootstrapping. Payloads only leave the backend sealed.

use crate::checker::{Kind, Label};
use crate::context::{
    open_all, seal_value, ContextError, ContextKey, ContextVar, FormatError, KeyId, VarData,
};
use crate::engine::{AlgebraError, AlgebraResult, Value, ValueAlgebra};
use crate::syntax::BinOp;

use super::cost::{CostEntry, CostTable, OpCounts, Prim};

pub const FRESH_BUDGET: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimCipher {
    pub(crate) payload: i64,
    pub noise_budget: u32,
    pub key_id: KeyId,
}

#[derive(Debug, Clone)]
pub struct FheSimAlgebra {
    key: ContextKey,
    key_id: KeyId,
    table: CostTable,
    fresh_budget: u32,
    counts: OpCounts,
}

pub fn fhe_sim_algebra(key: ContextKey, cost_table: CostTable, fresh_budget: u32) -> FheSimAlgebra {
    FheSimAlgebra::new(key, cost_table, fresh_budget)
}

impl FheSimAlgebra {
    pub fn new(key: ContextKey, table: CostTable, fresh_budget: u32) -> Self {
        FheSimAlgebra {
            key_id: key.id(),
            key,
            table,
            fresh_budget,
            counts: OpCounts::default(),
        }
    }

    pub fn with_defaults(key: ContextKey) -> Self {
        FheSimAlgebra::new(key, CostTable::default(), FRESH_BUDGET)
    }

    pub fn fresh_budget(&self) -> u32 {
        self.fresh_budget
    }

    fn mint(&self, payload: i64, noise_budget: u32) -> SimCipher {
        SimCipher {
            payload,
            noise_budget,
            key_id: self.key_id,
        }
    }

    /// Validates keys, charges noise and counts the operation; returns the
    /// budget of the result.
    fn charge(&mut self, prim: Prim, entry: CostEntry, inputs: &[&SimCipher]) -> AlgebraResult<u32> {
        for c in inputs {
            if c.key_id != self.key_id {
                return Err(AlgebraError::KeyMismatch(self.key_id, c.key_id));
            }
        }
        let available = inputs
            .iter()
            .map(|c| c.noise_budget)
            .min()
            .unwrap_or(self.fresh_budget);
        let remaining = available
            .checked_sub(entry.noise)
            .ok_or(AlgebraError::NoiseExhausted {
                needed: entry.noise,
                available,
            })?;
        self.counts.encrypted.bump(prim);
        Ok(remaining)
    }
}

impl ValueAlgebra for FheSimAlgebra {
    type Cipher = SimCipher;

    fn name(&self) -> &'static str {
        "fhe-sim"
    }

    fn cost_table(&self) -> &CostTable {
        &self.table
    }

    fn counts(&self) -> &OpCounts {
        &self.counts
    }

    fn counts_mut(&mut self) -> &mut OpCounts {
        &mut self.counts
    }

    fn key(&self) -> Option<&ContextKey> {
        Some(&self.key)
    }

    fn import(&mut self, name: &str, var: &ContextVar) -> Result<Value<SimCipher>, ContextError> {
        match (&var.label, &var.data) {
            (Label::Clear, VarData::Plain(v)) => Ok(match var.kind {
                Kind::Scalar => Value::ClearInt(v[0]),
                Kind::Vector => Value::ClearVec(v.as_slice().into()),
            }),
            (_, VarData::Plain(_)) => Err(ContextError::NotSealed(name.to_string())),
            (_, VarData::Sealed {
                envelopes,
                noise_budget,
            }) => {
                let budget = noise_budget.unwrap_or(self.fresh_budget);
                if budget > self.fresh_budget {
                    return Err(ContextError::Format(FormatError {
                        path: format!("$.variables.{name}.noise_budget"),
                        reason: format!("exceeds the fresh budget {}", self.fresh_budget),
                    }));
                }
                let cts: Vec<SimCipher> = open_all(&self.key, name, envelopes)?
                    .into_iter()
                    .map(|p| self.mint(p, budget))
                    .collect();
                Ok(match var.kind {
                    Kind::Scalar => Value::Cipher(cts.into_iter().next().expect("scalar has one envelope")),
                    Kind::Vector => Value::CipherVec(cts.into()),
                })
            }
        }
    }

    fn export_encrypted(&mut self, name: &str, values: &[SimCipher], vector: bool) -> ContextVar {
        let envelopes = values
            .iter()
            .enumerate()
            .map(|(i, c)| seal_value(&self.key, name, i as u32, c.payload))
            .collect();
        ContextVar {
            label: Label::Encrypted,
            kind: if vector { Kind::Vector } else { Kind::Scalar },
            data: VarData::Sealed {
                envelopes,
                noise_budget: values.iter().map(|c| c.noise_budget).min(),
            },
        }
    }

    fn decrypt(&self, c: &SimCipher) -> i64 {
        c.payload
    }

    fn encrypt_clear(&mut self, v: i64) -> AlgebraResult<SimCipher> {
        Ok(self.mint(v, self.fresh_budget))
    }

    fn add(&mut self, a: &SimCipher, b: &SimCipher) -> AlgebraResult<SimCipher> {
        let budget = self.charge(Prim::Add, self.table.enc_add, &[a, b])?;
        Ok(self.mint(a.payload.wrapping_add(b.payload), budget))
    }

    fn sub(&mut self, a: &SimCipher, b: &SimCipher) -> AlgebraResult<SimCipher> {
        let budget = self.charge(Prim::Sub, self.table.enc_sub, &[a, b])?;
        Ok(self.mint(a.payload.wrapping_sub(b.payload), budget))
    }

    fn mul(&mut self, a: &SimCipher, b: &SimCipher) -> AlgebraResult<SimCipher> {
        let budget = self.charge(Prim::Mul, self.table.enc_mul, &[a, b])?;
        Ok(self.mint(a.payload.wrapping_mul(b.payload), budget))
    }

    fn mul_clear(&mut self, a: &SimCipher, k: i64) -> AlgebraResult<SimCipher> {
        let budget = self.charge(Prim::MulClear, self.table.enc_mul_clear, &[a])?;
        Ok(self.mint(a.payload.wrapping_mul(k), budget))
    }

    fn div_clear(&mut self, a: &SimCipher, divisor: i64) -> AlgebraResult<SimCipher> {
        if divisor == 0 {
            return Err(AlgebraError::Capability("division by zero".into()));
        }
        let budget = self.charge(Prim::Div, self.table.enc_div_clear, &[a])?;
        Ok(self.mint(a.payload.wrapping_div(divisor), budget))
    }

    fn cmp(&mut self, op: BinOp, a: &SimCipher, b: &SimCipher) -> AlgebraResult<SimCipher> {
        let result = op
            .compare(a.payload, b.payload)
            .ok_or_else(|| AlgebraError::Capability(format!("`{}` is not a comparison", op.symbol())))?;
        let budget = self.charge(Prim::Cmp, self.table.enc_cmp, &[a, b])?;
        Ok(self.mint(result as i64, budget))
    }

    fn mux(&mut self, cond: &SimCipher, a: &SimCipher, b: &SimCipher) -> AlgebraResult<SimCipher> {
        let budget = self.charge(Prim::Mux, self.table.mux, &[cond, a, b])?;
        // a·c + b·(1 − c)
        let c = cond.payload;
        let payload = a
            .payload
            .wrapping_mul(c)
            .wrapping_add(b.payload.wrapping_mul(1 - c));
        Ok(self.mint(payload, budget))
    }
}
