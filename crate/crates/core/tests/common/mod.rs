//! Test-side generators and reference implementations shared by the
//! integration suites.

#![allow(dead_code)]

pub mod gen;
pub mod reference;

use std::path::PathBuf;

use serde::Deserialize;

use hybridsl_core::checker::Signature;

#[derive(Debug, Deserialize)]
pub struct Manifest {
    pub programs: Vec<Entry>,
    pub reject: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
pub struct Entry {
    pub file: String,
    pub signature: Signature,
    #[serde(default)]
    pub expect: Option<String>,
}

impl Entry {
    pub fn source(&self) -> String {
        std::fs::read_to_string(corpus_dir().join(&self.file)).expect("corpus file")
    }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn manifest() -> Manifest {
    let text = std::fs::read_to_string(corpus_dir().join("manifest.json")).expect("manifest");
    serde_json::from_str(&text).expect("manifest parses")
}

pub const COVARIANCE: &str = include_str!("../../corpus/covariance.hsl");

/// Direct transcription of the covariance loops over plain integers.
pub fn covariance_oracle(x: &[i64], y: &[i64]) -> i64 {
    let n = x.len() as i64;
    let x_sum = x.iter().fold(0i64, |a, &v| a.wrapping_add(v));
    let y_sum = y.iter().fold(0i64, |a, &v| a.wrapping_add(v));
    let (x_mean, y_mean) = (x_sum / n, y_sum / n);
    let mut sum = 0i64;
    for i in 0..x.len() {
        sum = sum.wrapping_add((x[i] - x_mean).wrapping_mul(y[i] - y_mean));
    }
    sum / n
}
