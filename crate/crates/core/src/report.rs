//! Canonical report serialization. Reports are JSON with sorted keys and
//! shortest-roundtrip floats, so identical runs produce byte-identical
//! documents.

use serde::Serialize;

use crate::error::Result;

/// One verification line: a named check with its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub details: String,
}

impl CheckLine {
    pub fn new(name: &str, pass: bool, details: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, details: details.into() }
    }
}

/// Serialize with sorted keys. Routing through `serde_json::Value` puts every
/// object into a BTreeMap, which prints keys in order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::to_value(value)?)?)
}
