use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::identity::{sha256, to_canonical, Digest256, Timestamp};

/// One protocol step as observed by the orchestrator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Event {
    pub seq: u64,
    pub at: Timestamp,
    /// Agent name, or the anonymous DID acting for one.
    pub actor: String,
    /// Step name, e.g. `ledger.updateDid`.
    pub step: String,
    pub product: Option<String>,
    /// String-valued details only, so every event canonicalizes.
    pub detail: BTreeMap<String, Value>,
}

impl Event {
    pub fn to_line(&self) -> String {
        String::from_utf8(to_canonical(self).expect("events hold no floats")).expect("canonical JSON is UTF-8")
    }
}

/// Ordered event log of everything a [`super::Network`] did.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        self.events.truncate(len);
    }

    pub(crate) fn push(&mut self, at: Timestamp, actor: &str, step: &str, product: Option<String>, detail: &[(&str, String)]) {
        self.events.push(Event {
            seq: self.events.len() as u64,
            at,
            actor: actor.to_owned(),
            step: step.to_owned(),
            product,
            detail: detail.iter().map(|(k, v)| ((*k).to_owned(), Value::String(v.clone()))).collect(),
        });
    }

    /// Step names in order; what golden files compare against.
    pub fn steps(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.step.as_str()).collect()
    }

    /// One canonical JSON event per line, newline terminated.
    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| e.to_line() + "\n").collect()
    }

    pub fn digest(&self) -> Digest256 {
        sha256(self.to_text().as_bytes())
    }
}
