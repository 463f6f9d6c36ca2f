//! JSON instance documents.
//!
//! ```json
//! {
//!   "k": 1,
//!   "value_cap": "10",
//!   "alpha": "0.5",
//!   "seller_neighbors": [1],
//!   "buyers": [
//!     { "id": 1, "label": "a", "valuations": ["4"], "neighbors": [2] },
//!     { "id": 2, "valuations": [10], "neighbors": [] }
//!   ],
//!   "true_profile": [ ...same shape as buyers... ]
//! }
//! ```
//!
//! Numbers may be JSON numbers or strings holding decimals or `p/q`
//! fractions. Valuation vectors shorter than `k` are zero-padded. Buyer ids
//! must be exactly `1..=n`, each listed once.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use netauction::{format_value, parse_value, AuctionInstance, BuyerId, BuyerType, Value};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InstanceFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl fmt::Display) -> InstanceFileError {
    InstanceFileError::Field { field: field.into(), message: message.to_string() }
}

/// A number as written: JSON numbers keep their literal text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberText {
    Text(String),
    Number(serde_json::Number),
}

impl NumberText {
    fn parse(&self, field: &str) -> Result<Value, InstanceFileError> {
        let text = match self {
            NumberText::Text(s) => s.clone(),
            NumberText::Number(n) => n.to_string(),
        };
        parse_value(&text).map_err(|e| field_err(field, format!("`{text}`: {e}")))
    }

    fn exact(v: &Value) -> Self {
        NumberText::Text(format_value(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub valuations: Vec<NumberText>,
    #[serde(default)]
    pub neighbors: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_cap: Option<NumberText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<NumberText>,
    pub seller_neighbors: Vec<u32>,
    pub buyers: Vec<BuyerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_profile: Option<Vec<BuyerEntry>>,
}

/// A parsed document: the instance plus the optional alpha parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedInstance {
    pub instance: AuctionInstance,
    pub alpha: Option<Value>,
}

fn neighbor_set(ids: &[u32], n: usize, field: &str) -> Result<BTreeSet<BuyerId>, InstanceFileError> {
    let mut out = BTreeSet::new();
    for &id in ids {
        if id == 0 || id as usize > n {
            return Err(field_err(field, format!("unknown buyer {id} (ids run from 1 to {n})")));
        }
        if !out.insert(BuyerId(id)) {
            return Err(field_err(field, format!("buyer {id} listed twice")));
        }
    }
    Ok(out)
}

/// Buyer types in id order, checking that ids are exactly `1..=n`.
fn profile(entries: &[BuyerEntry], section: &str) -> Result<(Vec<BuyerType>, Vec<Option<String>>), InstanceFileError> {
    let n = entries.len();
    let mut slots: Vec<Option<(BuyerType, Option<String>)>> = vec![None; n];
    for (pos, entry) in entries.iter().enumerate() {
        let here = format!("{section}[{pos}]");
        if entry.id == 0 || entry.id as usize > n {
            return Err(field_err(format!("{here}.id"), format!("id {} outside 1..={n}", entry.id)));
        }
        let slot = &mut slots[entry.id as usize - 1];
        if slot.is_some() {
            return Err(field_err(format!("{here}.id"), format!("buyer {} listed twice", entry.id)));
        }
        let valuations = entry
            .valuations
            .iter()
            .enumerate()
            .map(|(l, v)| v.parse(&format!("{here}.valuations[{l}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let neighbors = neighbor_set(&entry.neighbors, n, &format!("{here}.neighbors"))?;
        if neighbors.contains(&BuyerId(entry.id)) {
            return Err(field_err(format!("{here}.neighbors"), format!("buyer {} lists itself", entry.id)));
        }
        *slot = Some((BuyerType::new(valuations, neighbors), entry.label.clone()));
    }
    Ok(slots.into_iter().map(|s| s.expect("every id in 1..=n was filled")).unzip())
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, InstanceFileError> {
        serde_json::from_str(text).map_err(|e| InstanceFileError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, InstanceFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InstanceFileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents always serialize")
    }

    pub fn load(&self) -> Result<LoadedInstance, InstanceFileError> {
        let (declared, labels) = profile(&self.buyers, "buyers")?;
        let n = declared.len();
        let seller = neighbor_set(&self.seller_neighbors, n, "seller_neighbors")?;
        let mut instance =
            AuctionInstance::new(self.k, seller, declared).map_err(|e| field_err("buyers", e))?.with_labels(labels);
        if let Some(truth) = &self.true_profile {
            if truth.len() != n {
                return Err(field_err("true_profile", format!("has {} buyers, expected {n}", truth.len())));
            }
            let (truth, _) = profile(truth, "true_profile")?;
            instance = instance.with_truth(truth).map_err(|e| field_err("true_profile", e))?;
        }
        if let Some(cap) = &self.value_cap {
            let cap = cap.parse("value_cap")?;
            instance = instance.with_value_cap(cap).map_err(|e| field_err("value_cap", e))?;
        }
        let alpha = self.alpha.as_ref().map(|a| a.parse("alpha")).transpose()?;
        Ok(LoadedInstance { instance, alpha })
    }

    /// Canonical document for an instance: ids in order, exact numbers, and
    /// a true profile only when one is attached.
    pub fn from_instance(instance: &AuctionInstance, alpha: Option<Value>) -> Self {
        let entries = |profile: &[BuyerType]| -> Vec<BuyerEntry> {
            profile
                .iter()
                .enumerate()
                .map(|(idx, t)| {
                    let id = BuyerId::from_index(idx);
                    BuyerEntry {
                        id: id.0,
                        label: instance.label(id).map(str::to_string),
                        valuations: t.valuations.iter().map(NumberText::exact).collect(),
                        neighbors: t.neighbors.iter().map(|b| b.0).collect(),
                    }
                })
                .collect()
        };
        let true_profile = instance.true_profile().map(|truth| {
            let mut rows = entries(truth);
            for row in &mut rows {
                row.label = None;
            }
            rows
        });
        InstanceFile {
            k: instance.k(),
            value_cap: instance.value_cap().as_ref().map(NumberText::exact),
            alpha: alpha.as_ref().map(NumberText::exact),
            seller_neighbors: instance.seller_neighbors().iter().map(|b| b.0).collect(),
            buyers: entries(instance.declared_profile()),
            true_profile,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
        "k": 1, "value_cap": 10, "alpha": "1/2",
        "seller_neighbors": [1],
        "buyers": [
            {"id": 2, "valuations": [10]},
            {"id": 1, "label": "near", "valuations": ["4"], "neighbors": [2]}
        ]
    }"#;

    #[test]
    fn accepts_numbers_and_strings_in_any_id_order() {
        let loaded = InstanceFile::from_json(CHAIN).unwrap().load().unwrap();
        let inst = loaded.instance;
        assert_eq!(loaded.alpha, Some(Value::new(1, 2)));
        assert_eq!(inst.declared(BuyerId(1)).marginal(1), Value::from_integer(4));
        assert_eq!(inst.label(BuyerId(1)), Some("near"));
        assert_eq!(inst.value_cap(), Some(Value::from_integer(10)));
    }

    #[test]
    fn canonical_form_round_trips() {
        let first = InstanceFile::from_json(CHAIN).unwrap().load().unwrap();
        let doc = InstanceFile::from_instance(&first.instance, first.alpha);
        let again = InstanceFile::from_json(&doc.to_json()).unwrap().load().unwrap();
        assert_eq!(first, again);
    }

    fn load_err(text: &str) -> String {
        match InstanceFile::from_json(text).and_then(|f| f.load()) {
            Ok(_) => panic!("expected an error"),
            Err(e) => e.to_string(),
        }
    }

    #[test]
    fn reports_the_offending_field() {
        let dup = r#"{"k":1,"seller_neighbors":[1],"buyers":[{"id":1,"valuations":[1],"neighbors":[2,2]},{"id":2,"valuations":[1]}]}"#;
        assert!(load_err(dup).starts_with("buyers[0].neighbors"), "{}", load_err(dup));
        let gap = r#"{"k":1,"seller_neighbors":[1],"buyers":[{"id":1,"valuations":[1]},{"id":3,"valuations":[1]}]}"#;
        assert!(load_err(gap).starts_with("buyers[1].id"));
        let selfloop = r#"{"k":1,"seller_neighbors":[1],"buyers":[{"id":1,"valuations":[1],"neighbors":[1]}]}"#;
        assert!(load_err(selfloop).contains("lists itself"));
        let bad = r#"{"k":1,"seller_neighbors":[1],"buyers":[{"id":1,"valuations":["x"]}]}"#;
        assert!(load_err(bad).starts_with("buyers[0].valuations[0]"));
        let syntax = "{\"k\": 1,\n \"buyers\": [}";
        assert!(load_err(syntax).contains("line 2"));
    }
}
