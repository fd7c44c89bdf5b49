//! The three accumulating stores of a session: objects, zones and knowns.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, VariableId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRegistry {
    entries: BTreeMap<u8, String>,
    closed: bool,
}

impl ObjectRegistry {
    pub fn contains(&self, n: u8) -> bool {
        self.entries.contains_key(&n)
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn register(&mut self, n: u8, description: &str) -> Result<()> {
        let description = description.trim();
        if self.closed {
            return Err(Error::AnswerShape("the object list is closed".into()));
        }
        if description.is_empty() {
            return Err(Error::AnswerShape("object description is empty".into()));
        }
        if self.entries.contains_key(&n) {
            return Err(Error::AnswerShape(format!(
                "object {n} is already registered"
            )));
        }
        self.entries.insert(n, description.to_string());
        Ok(())
    }

    pub fn description(&self, n: u8) -> Option<&str> {
        self.entries.get(&n).map(String::as_str)
    }

    /// How the object reads inside a sentence: "a car" becomes "the car".
    pub fn display_name(&self, n: u8) -> Option<String> {
        self.description(n).map(definite)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &str)> {
        self.entries.iter().map(|(n, d)| (*n, d.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn definite(description: &str) -> String {
    let lower = description.to_lowercase();
    for article in ["a ", "an "] {
        if lower.starts_with(article) {
            return format!("the {}", &description[article.len()..]);
        }
    }
    description.to_string()
}

/// A consent question about carrying one zone's terminal quantity into the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkKey {
    pub object: u8,
    pub from_zone: u8,
    pub to_zone: u8,
    pub terminal: VariableId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneRegistry {
    /// object → zone index → student description
    entries: BTreeMap<u8, BTreeMap<u8, String>>,
    temporal_order: BTreeMap<u8, Vec<u8>>,
    declined_links: BTreeSet<LinkKey>,
}

impl ZoneRegistry {
    pub fn contains(&self, object: u8, zone: u8) -> bool {
        self.description(object, zone).is_some()
    }

    pub fn description(&self, object: u8, zone: u8) -> Option<&str> {
        self.entries.get(&object)?.get(&zone).map(String::as_str)
    }

    pub fn register(&mut self, object: u8, zone: u8, description: &str) -> Result<()> {
        let description = description.trim();
        if description.is_empty() {
            return Err(Error::AnswerShape("zone description is empty".into()));
        }
        let zones = self.entries.entry(object).or_default();
        if zones.contains_key(&zone) {
            return Err(Error::AnswerShape(format!(
                "zone {zone} is already described for object {object}"
            )));
        }
        zones.insert(zone, description.to_string());
        Ok(())
    }

    /// Zone indices of one object in ascending order.
    pub fn zones_of(&self, object: u8) -> Vec<u8> {
        self.entries
            .get(&object)
            .map(|z| z.keys().copied().collect())
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, u8, &str)> {
        self.entries
            .iter()
            .flat_map(|(o, zs)| zs.iter().map(move |(z, d)| (*o, *z, d.as_str())))
    }

    pub fn temporal_order(&self, object: u8) -> Option<&[u8]> {
        self.temporal_order.get(&object).map(Vec::as_slice)
    }

    /// True when an ordering exists and is a permutation of the object's zones.
    pub fn has_current_order(&self, object: u8) -> bool {
        match self.temporal_order.get(&object) {
            Some(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                sorted == self.zones_of(object)
            }
            None => false,
        }
    }

    pub fn set_temporal_order(&mut self, object: u8, order: Vec<u8>) -> Result<()> {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != self.zones_of(object) {
            return Err(Error::AnswerShape(format!(
                "ordering {order:?} is not a permutation of the zones {:?}",
                self.zones_of(object)
            )));
        }
        self.temporal_order.insert(object, order);
        Ok(())
    }

    pub fn link_declined(&self, key: &LinkKey) -> bool {
        self.declined_links.contains(key)
    }

    pub fn decline_link(&mut self, key: LinkKey) {
        self.declined_links.insert(key);
    }
}

/// How a known came to be known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Student,
    SharedPropagation,
    SolvedAlgebraically,
    ZoneLink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KnownKey {
    pub object: u8,
    pub eqn: u8,
    pub var: u8,
    pub zone: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownEntry {
    pub object: u8,
    pub eqn: u8,
    /// Position of the variable inside `eqn`, 1-based.
    pub var: u8,
    pub zone: u8,
    pub symbol: VariableId,
    pub response: String,
    pub provenance: Provenance,
}

impl KnownEntry {
    pub fn new(
        domain: &Domain,
        object: u8,
        eqn: u8,
        symbol: VariableId,
        zone: u8,
        response: impl Into<String>,
        provenance: Provenance,
    ) -> Result<KnownEntry> {
        let var = domain
            .position_of(eqn, symbol)
            .ok_or(Error::VariableNotInEquation { var: symbol, eqn })?;
        Ok(KnownEntry {
            object,
            eqn,
            var,
            zone,
            symbol,
            response: response.into(),
            provenance,
        })
    }

    pub fn key(&self) -> KnownKey {
        KnownKey {
            object: self.object,
            eqn: self.eqn,
            var: self.var,
            zone: self.zone,
        }
    }
}

/// Insertion-ordered set of knowns, unique on `(object, eqn, var, zone)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<KnownEntry>", into = "Vec<KnownEntry>")]
pub struct KnownsStore {
    entries: IndexMap<KnownKey, KnownEntry>,
}

impl KnownsStore {
    pub fn new() -> KnownsStore {
        KnownsStore::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &KnownKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &KnownKey) -> Option<&KnownEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, entry: KnownEntry) -> Result<()> {
        let key = entry.key();
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKnown {
                object: key.object,
                eqn: key.eqn,
                var: key.var,
                zone: key.zone,
            });
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &KnownEntry> {
        self.entries.values()
    }

    /// Whether `symbol` is known for the object and zone in any equation.
    pub fn knows_symbol(&self, object: u8, zone: u8, symbol: VariableId) -> bool {
        self.first_with_symbol(object, zone, symbol).is_some()
    }

    pub fn first_with_symbol(
        &self,
        object: u8,
        zone: u8,
        symbol: VariableId,
    ) -> Option<&KnownEntry> {
        self.iter()
            .find(|k| k.object == object && k.zone == zone && k.symbol == symbol)
    }

    /// Number of entries whose `(object, eqn, zone)` equals the arguments.
    pub fn count_matching(&self, object: u8, eqn: u8, zone: u8) -> usize {
        self.iter()
            .filter(|k| k.object == object && k.eqn == eqn && k.zone == zone)
            .count()
    }
}

impl From<Vec<KnownEntry>> for KnownsStore {
    fn from(entries: Vec<KnownEntry>) -> KnownsStore {
        // later duplicates lose, matching insert()
        let mut store = KnownsStore::new();
        for e in entries {
            let _ = store.insert(e);
        }
        store
    }
}

impl From<KnownsStore> for Vec<KnownEntry> {
    fn from(store: KnownsStore) -> Vec<KnownEntry> {
        store.entries.into_values().collect()
    }
}

/// The mutable store bundle owned by one session.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stores {
    pub objects: ObjectRegistry,
    pub zones: ZoneRegistry,
    pub knowns: KnownsStore,
}
