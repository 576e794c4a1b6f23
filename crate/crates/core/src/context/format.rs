//! JSON wire format for contexts.
//!
//! ```text
//! {"key_id":"<16 hex>","variables":{"<name>":{...}},"version":1}
//! ```
//!
//! A clear variable carries `value` (an integer, or an array for vectors).
//! An encrypted variable carries `envelopes` (one base64 string for a
//! scalar, an array for a vector) and optionally `noise_budget`. Encrypted
//! variables may instead carry a plain `value`; that unsealed form exists
//! for authoring fixtures and is what `unseal` produces.
//!
//! Output is canonical: keys sorted, no whitespace.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::envelope::SealedEnvelope;
use super::{Context, ContextVar, VarData, CONTEXT_VERSION};
use crate::checker::{Kind, Label};
use crate::syntax::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {reason}")]
pub struct FormatError {
    pub path: String,
    pub reason: String,
}

fn fail<T>(path: &str, reason: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError {
        path: path.to_string(),
        reason: reason.into(),
    })
}

/// JSON tree that remembers key order and rejects duplicate keys, which
/// `serde_json::Value` would silently collapse.
enum Json {
    Null,
    Bool,
    Int(i64),
    OtherNumber,
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(String, Json)>),
}

impl Json {
    fn describe(&self) -> &'static str {
        match self {
            Json::Null => "null",
            Json::Bool => "a boolean",
            Json::Int(_) => "an integer",
            Json::OtherNumber => "a non-integer or out-of-range number",
            Json::Str(_) => "a string",
            Json::Array(_) => "an array",
            Json::Object(_) => "an object",
        }
    }
}

impl<'de> Deserialize<'de> for Json {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct JsonVisitor;

        impl<'de> Visitor<'de> for JsonVisitor {
            type Value = Json;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON value")
            }

            fn visit_unit<E>(self) -> Result<Json, E> {
                Ok(Json::Null)
            }

            fn visit_bool<E>(self, _: bool) -> Result<Json, E> {
                Ok(Json::Bool)
            }

            fn visit_i64<E>(self, v: i64) -> Result<Json, E> {
                Ok(Json::Int(v))
            }

            fn visit_u64<E>(self, v: u64) -> Result<Json, E> {
                Ok(i64::try_from(v)
                    .map(Json::Int)
                    .unwrap_or(Json::OtherNumber))
            }

            fn visit_f64<E>(self, _: f64) -> Result<Json, E> {
                Ok(Json::OtherNumber)
            }

            fn visit_str<E>(self, v: &str) -> Result<Json, E> {
                Ok(Json::Str(v.to_string()))
            }

            fn visit_string<E>(self, v: String) -> Result<Json, E> {
                Ok(Json::Str(v))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Json, A::Error> {
                let mut items = Vec::new();
                while let Some(item) = seq.next_element()? {
                    items.push(item);
                }
                Ok(Json::Array(items))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Json, A::Error> {
                let mut entries: Vec<(String, Json)> = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    if entries.iter().any(|(k, _)| *k == key) {
                        return Err(de::Error::custom(format!("duplicate key `{key}`")));
                    }
                    let value = map.next_value()?;
                    entries.push((key, value));
                }
                Ok(Json::Object(entries))
            }
        }

        d.deserialize_any(JsonVisitor)
    }
}

fn object<'a>(
    json: &'a Json,
    path: &str,
    allowed: &[&str],
) -> Result<BTreeMap<&'a str, &'a Json>, FormatError> {
    let Json::Object(entries) = json else {
        return fail(path, format!("expected an object, found {}", json.describe()));
    };
    let mut out = BTreeMap::new();
    for (k, v) in entries {
        if !allowed.contains(&k.as_str()) {
            return fail(&format!("{path}.{k}"), "unknown field");
        }
        out.insert(k.as_str(), v);
    }
    Ok(out)
}

fn int(json: &Json, path: &str) -> Result<i64, FormatError> {
    match json {
        Json::Int(v) => Ok(*v),
        other => fail(
            path,
            format!("expected a 64-bit integer, found {}", other.describe()),
        ),
    }
}

fn string<'a>(json: &'a Json, path: &str) -> Result<&'a str, FormatError> {
    match json {
        Json::Str(s) => Ok(s),
        other => fail(path, format!("expected a string, found {}", other.describe())),
    }
}

fn array<'a>(json: &'a Json, path: &str) -> Result<&'a [Json], FormatError> {
    match json {
        Json::Array(items) => Ok(items),
        other => fail(path, format!("expected an array, found {}", other.describe())),
    }
}

fn envelope(json: &Json, path: &str) -> Result<SealedEnvelope, FormatError> {
    SealedEnvelope::from_base64(string(json, path)?).or_else(|e| fail(path, e.to_string()))
}

pub fn load_context(bytes: &[u8]) -> Result<Context, FormatError> {
    let text = std::str::from_utf8(bytes).or_else(|_| fail("$", "not valid UTF-8"))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let doc = Json::deserialize(&mut de).or_else(|e| fail("$", e.to_string()))?;
    de.end().or_else(|e| fail("$", e.to_string()))?;

    let top = object(&doc, "$", &["version", "key_id", "variables"])?;
    let version = match top.get("version") {
        Some(v) => int(v, "$.version")?,
        None => return fail("$.version", "missing field"),
    };
    if version != CONTEXT_VERSION as i64 {
        return fail("$.version", format!("unsupported version {version}"));
    }
    let key_id = match top.get("key_id") {
        Some(v) => Some(
            string(v, "$.key_id")?
                .parse()
                .or_else(|e: super::KeyError| fail("$.key_id", e.to_string()))?,
        ),
        None => None,
    };
    let Some(vars_json) = top.get("variables") else {
        return fail("$.variables", "missing field");
    };
    let Json::Object(entries) = vars_json else {
        return fail("$.variables", "expected an object");
    };
    let mut variables = BTreeMap::new();
    for (name, json) in entries {
        let path = format!("$.variables.{name}");
        if !is_identifier(name) {
            return fail(&path, format!("`{name}` is not a valid identifier"));
        }
        variables.insert(name.clone(), load_var(json, &path)?);
    }
    Ok(Context {
        version: CONTEXT_VERSION,
        key_id,
        variables,
    })
}

fn load_var(json: &Json, path: &str) -> Result<ContextVar, FormatError> {
    let fields = object(
        json,
        path,
        &["label", "kind", "value", "envelopes", "noise_budget"],
    )?;
    let label = match fields.get("label").map(|j| string(j, &format!("{path}.label"))) {
        Some(Ok("clear")) => Label::Clear,
        Some(Ok("encrypted")) => Label::Encrypted,
        Some(Ok(other)) => return fail(&format!("{path}.label"), format!("unknown label `{other}`")),
        Some(Err(e)) => return Err(e),
        None => return fail(&format!("{path}.label"), "missing field"),
    };
    let kind = match fields.get("kind").map(|j| string(j, &format!("{path}.kind"))) {
        Some(Ok("scalar")) => Kind::Scalar,
        Some(Ok("vector")) => Kind::Vector,
        Some(Ok(other)) => return fail(&format!("{path}.kind"), format!("unknown kind `{other}`")),
        Some(Err(e)) => return Err(e),
        None => return fail(&format!("{path}.kind"), "missing field"),
    };

    let data = match (fields.get("value"), fields.get("envelopes")) {
        (Some(_), Some(_)) => return fail(path, "`value` and `envelopes` are mutually exclusive"),
        (None, None) => return fail(path, "needs `value` or `envelopes`"),
        (Some(value), None) => {
            if fields.contains_key("noise_budget") {
                return fail(&format!("{path}.noise_budget"), "only sealed variables carry a noise budget");
            }
            let vpath = format!("{path}.value");
            let values = match kind {
                Kind::Scalar => vec![int(value, &vpath)?],
                Kind::Vector => array(value, &vpath)?
                    .iter()
                    .enumerate()
                    .map(|(i, j)| int(j, &format!("{vpath}[{i}]")))
                    .collect::<Result<_, _>>()?,
            };
            VarData::Plain(values)
        }
        (None, Some(envs)) => {
            if label == Label::Clear {
                return fail(&format!("{path}.envelopes"), "clear variables cannot be sealed");
            }
            let epath = format!("{path}.envelopes");
            let envelopes = match kind {
                Kind::Scalar => vec![envelope(envs, &epath)?],
                Kind::Vector => array(envs, &epath)?
                    .iter()
                    .enumerate()
                    .map(|(i, j)| envelope(j, &format!("{epath}[{i}]")))
                    .collect::<Result<_, _>>()?,
            };
            let noise_budget = match fields.get("noise_budget") {
                Some(j) => {
                    let npath = format!("{path}.noise_budget");
                    let v = int(j, &npath)?;
                    Some(u32::try_from(v).or_else(|_| fail(&npath, "must be a non-negative 32-bit integer"))?)
                }
                None => None,
            };
            VarData::Sealed {
                envelopes,
                noise_budget,
            }
        }
    };
    Ok(ContextVar { label, kind, data })
}

pub fn save_context(context: &Context) -> Vec<u8> {
    // Fields are inserted in lexicographic order so the output is canonical
    // whether or not serde_json keeps maps sorted.
    let mut vars = Map::new();
    for (name, var) in &context.variables {
        let mut obj = Map::new();
        let shaped = |items: Vec<Value>| match var.kind {
            Kind::Scalar => items.into_iter().next().unwrap_or(Value::Null),
            Kind::Vector => Value::Array(items),
        };
        match &var.data {
            VarData::Plain(values) => {
                obj.insert("kind".into(), json!(var.kind.to_string()));
                obj.insert("label".into(), json!(var.label.to_string()));
                obj.insert("value".into(), shaped(values.iter().map(|v| json!(v)).collect()));
            }
            VarData::Sealed {
                envelopes,
                noise_budget,
            } => {
                let encoded = envelopes.iter().map(|e| json!(e.to_base64())).collect();
                obj.insert("envelopes".into(), shaped(encoded));
                obj.insert("kind".into(), json!(var.kind.to_string()));
                obj.insert("label".into(), json!(var.label.to_string()));
                if let Some(budget) = noise_budget {
                    obj.insert("noise_budget".into(), json!(budget));
                }
            }
        }
        vars.insert(name.clone(), Value::Object(obj));
    }
    let mut top = Map::new();
    if let Some(id) = context.key_id {
        top.insert("key_id".into(), json!(id.to_string()));
    }
    top.insert("variables".into(), Value::Object(vars));
    top.insert("version".into(), json!(context.version));
    serde_json::to_vec(&Value::Object(top)).expect("serializing a JSON value cannot fail")
}
