//! Serde helper for maps keyed by vertex index or depth.
//!
//! JSON object keys are strings, and the internally tagged enums used
//! for templates and weight specs buffer their content in a way that
//! bypasses serde_json's integer-key parsing, so these maps go through
//! an explicit string conversion.

use serde::de::Error;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

pub fn serialize<S, V>(map: &BTreeMap<usize, V>, serializer: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    V: Serialize,
{
    let by_string: BTreeMap<String, &V> = map.iter().map(|(k, v)| (k.to_string(), v)).collect();
    by_string.serialize(serializer)
}

pub fn deserialize<'de, D, V>(deserializer: D) -> Result<BTreeMap<usize, V>, D::Error>
where
    D: Deserializer<'de>,
    V: Deserialize<'de>,
{
    let by_string: BTreeMap<String, V> = Deserialize::deserialize(deserializer)?;
    by_string
        .into_iter()
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|k| (k, v))
                .map_err(|_| D::Error::custom(format!("map key {k:?} is not an index")))
        })
        .collect()
}
