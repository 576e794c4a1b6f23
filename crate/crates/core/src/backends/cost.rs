use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Abstract cost and noise charge of one primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    pub cost: u64,
    pub noise: u32,
}

impl CostEntry {
    pub const fn new(cost: u64, noise: u32) -> Self {
        CostEntry { cost, noise }
    }
}

/// Per-primitive costs. Encrypted entries also give the noise each
/// operation consumes from its result's budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostTable {
    pub enc_add: CostEntry,
    pub enc_sub: CostEntry,
    /// cipher × cipher
    pub enc_mul: CostEntry,
    /// cipher × clear
    pub enc_mul_clear: CostEntry,
    pub enc_div_clear: CostEntry,
    pub enc_cmp: CostEntry,
    pub mux: CostEntry,
    /// Any operation on plaintext.
    pub clear: CostEntry,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            enc_add: CostEntry::new(1, 1),
            enc_sub: CostEntry::new(1, 1),
            enc_mul: CostEntry::new(10, 10),
            enc_mul_clear: CostEntry::new(2, 2),
            enc_div_clear: CostEntry::new(2, 2),
            enc_cmp: CostEntry::new(15, 15),
            mux: CostEntry::new(12, 12),
            clear: CostEntry::new(1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostTableError {
    #[error("invalid cost table: {0}")]
    Json(String),
    #[error("cost table entry `{0}` must have positive cost and noise")]
    NonPositive(&'static str),
}

impl CostTable {
    /// Reads a JSON object mapping entry names to `{"cost": .., "noise": ..}`.
    /// Entries not mentioned keep their defaults.
    pub fn from_json(bytes: &[u8]) -> Result<Self, CostTableError> {
        let table: CostTable =
            serde_json::from_slice(bytes).map_err(|e| CostTableError::Json(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), CostTableError> {
        for (name, entry) in self.encrypted_entries() {
            if entry.cost == 0 || entry.noise == 0 {
                return Err(CostTableError::NonPositive(name));
            }
        }
        Ok(())
    }

    fn encrypted_entries(&self) -> [(&'static str, CostEntry); 7] {
        [
            ("enc_add", self.enc_add),
            ("enc_sub", self.enc_sub),
            ("enc_mul", self.enc_mul),
            ("enc_mul_clear", self.enc_mul_clear),
            ("enc_div_clear", self.enc_div_clear),
            ("enc_cmp", self.enc_cmp),
            ("mux", self.mux),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    /// Multiplication of a ciphertext by a clear constant.
    MulClear,
    Div,
    Cmp,
    Mux,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimCounts {
    pub adds: u64,
    pub subs: u64,
    pub muls: u64,
    pub muls_by_clear: u64,
    pub divs: u64,
    pub cmps: u64,
    pub muxes: u64,
}

impl PrimCounts {
    pub fn bump(&mut self, prim: Prim) {
        let slot = match prim {
            Prim::Add => &mut self.adds,
            Prim::Sub => &mut self.subs,
            Prim::Mul => &mut self.muls,
            Prim::MulClear => &mut self.muls_by_clear,
            Prim::Div => &mut self.divs,
            Prim::Cmp => &mut self.cmps,
            Prim::Mux => &mut self.muxes,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        self.adds + self.subs + self.muls + self.muls_by_clear + self.divs + self.cmps + self.muxes
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    /// Per-field `>=`.
    pub fn dominates(&self, other: &PrimCounts) -> bool {
        self.adds >= other.adds
            && self.subs >= other.subs
            && self.muls >= other.muls
            && self.muls_by_clear >= other.muls_by_clear
            && self.divs >= other.divs
            && self.cmps >= other.cmps
            && self.muxes >= other.muxes
    }
}

/// Operation counts split by whether the operation ran on plaintext or
/// homomorphically.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub clear: PrimCounts,
    pub encrypted: PrimCounts,
}

impl OpCounts {
    /// Weighted sum of the counts under `table`.
    pub fn cost(&self, table: &CostTable) -> u64 {
        let e = &self.encrypted;
        self.clear.total() * table.clear.cost
            + e.adds * table.enc_add.cost
            + e.subs * table.enc_sub.cost
            + e.muls * table.enc_mul.cost
            + e.muls_by_clear * table.enc_mul_clear.cost
            + e.divs * table.enc_div_clear.cost
            + e.cmps * table.enc_cmp.cost
            + e.muxes * table.mux.cost
    }

    pub fn dominates(&self, other: &OpCounts) -> bool {
        self.clear.dominates(&other.clear) && self.encrypted.dominates(&other.encrypted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpReport {
    pub backend: String,
    pub counts: OpCounts,
    pub total_cost: u64,
    #[serde(with = "duration_micros", rename = "wall_time_us")]
    pub wall_time: Duration,
}

mod duration_micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_micros(u64::deserialize(d)?))
    }
}
