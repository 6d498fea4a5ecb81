//! Serde helpers for integers that may exceed 2^53.
//!
//! Values at or below 2^53 are written as JSON numbers, larger ones as
//! decimal strings. Either form is accepted when reading.

use serde::{Deserialize, Deserializer, Serializer};

pub const EXACT_DOUBLE_LIMIT: u64 = 1 << 53;

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(u64),
    Str(String),
}

fn parse<E: serde::de::Error>(v: NumOrStr) -> Result<u64, E> {
    match v {
        NumOrStr::Num(n) => Ok(n),
        NumOrStr::Str(s) => s.parse().map_err(E::custom),
    }
}

/// `#[serde(with = "wire::int")]` for `u64` fields.
pub mod int {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        if *v <= EXACT_DOUBLE_LIMIT {
            s.serialize_u64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        parse(NumOrStr::deserialize(d)?)
    }
}

/// `#[serde(with = "wire::opt_int")]` for `Option<u64>` fields.
pub mod opt_int {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => int::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        Option::<NumOrStr>::deserialize(d)?.map(parse).transpose()
    }
}

/// Prime-keyed maps. Keys are written as strings; reading goes through
/// strings too, so the map also survives internally tagged enums.
pub mod prime_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;

    use super::*;

    pub fn serialize<S: Serializer>(m: &BTreeMap<u64, usize>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&k.to_string(), v)?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, usize>, D::Error> {
        BTreeMap::<String, usize>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(serde::de::Error::custom))
            .collect()
    }
}
