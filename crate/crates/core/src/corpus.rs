//! Embedding collections, sense groups, sense inventories and taxonomies.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// One token occurrence with its contextual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub instance_id: String,
    pub lemma: String,
    pub pos: String,
    /// `None` for unlabeled (test) tokens.
    pub sense_id: Option<String>,
    pub layer: i32,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn vector_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&x| f64::from(x)).collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.sense_id.is_some()
    }
}

/// A validated, non-empty collection of records sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    model_id: String,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    /// Validates and wraps `records`. The dimension is taken from the first
    /// record and enforced on the rest; zero and non-finite vectors and
    /// duplicate ids are rejected.
    pub fn new(model_id: impl Into<String>, records: Vec<EmbeddingRecord>) -> Result<Self> {
        let dim = records.first().ok_or(Error::EmptySet)?.vector.len();
        let mut seen = BTreeSet::new();
        for r in &records {
            validate_vector(&r.instance_id, &r.vector, dim)?;
            if !seen.insert(r.instance_id.as_str()) {
                return Err(Error::DuplicateId(r.instance_id.clone()));
            }
        }
        Ok(EmbeddingSet { dim, model_id: model_id.into(), records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }

    pub fn labeled(&self) -> impl Iterator<Item = &EmbeddingRecord> {
        self.records.iter().filter(|r| r.is_labeled())
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = &EmbeddingRecord> {
        self.records.iter().filter(|r| !r.is_labeled())
    }

    /// Keeps only records of one layer; `None` if nothing remains.
    pub fn filter_layer(&self, layer: i32) -> Option<EmbeddingSet> {
        let records: Vec<_> = self.records.iter().filter(|r| r.layer == layer).cloned().collect();
        if records.is_empty() {
            return None;
        }
        Some(EmbeddingSet { dim: self.dim, model_id: self.model_id.clone(), records })
    }
}

/// Checks one vector against the set-level invariants.
pub fn validate_vector(id: &str, vector: &[f32], dim: usize) -> Result<()> {
    if vector.len() != dim {
        return Err(Error::DimensionMismatch { id: id.to_owned(), expected: dim, found: vector.len() });
    }
    if let Some(index) = vector.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { id: id.to_owned(), index });
    }
    if vector.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector(id.to_owned()));
    }
    Ok(())
}

/// All records of one sense.
#[derive(Debug, Clone)]
pub struct SenseGroup<'a> {
    pub sense_id: &'a str,
    pub members: Vec<&'a EmbeddingRecord>,
    pub dim: usize,
}

impl SenseGroup<'_> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|r| r.vector_f64()).collect()
    }

    /// POS tag of the first member.
    pub fn pos(&self) -> &str {
        self.members.first().map(|r| r.pos.as_str()).unwrap_or("")
    }
}

/// Partitions the labeled records by sense, sorted by sense id. Member order
/// follows record order.
pub fn group_by_sense(set: &EmbeddingSet) -> Vec<SenseGroup<'_>> {
    let mut groups: BTreeMap<&str, Vec<&EmbeddingRecord>> = BTreeMap::new();
    for r in set.records() {
        if let Some(sense) = r.sense_id.as_deref() {
            groups.entry(sense).or_default().push(r);
        }
    }
    groups.into_iter().map(|(sense_id, members)| SenseGroup { sense_id, members, dim: set.dim() }).collect()
}

pub type LemmaKey = (String, String);

/// Ordered candidate senses per (lemma, pos); the first is the first sense.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SenseInventory {
    entries: BTreeMap<LemmaKey, Vec<String>>,
}

impl SenseInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lemma: &str, pos: &str, senses: Vec<String>) -> Result<()> {
        let key = (lemma.to_owned(), pos.to_owned());
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateEntry { lemma: key.0, pos: key.1 });
        }
        if senses.is_empty() {
            return Err(Error::EmptySenseList { lemma: key.0, pos: key.1 });
        }
        let mut seen = BTreeSet::new();
        for s in &senses {
            if !seen.insert(s.as_str()) {
                return Err(Error::DuplicateSense { lemma: key.0, pos: key.1, sense: s.clone() });
            }
        }
        self.entries.insert(key, senses);
        Ok(())
    }

    pub fn senses(&self, lemma: &str, pos: &str) -> Option<&[String]> {
        self.entries.get(&(lemma.to_owned(), pos.to_owned())).map(Vec::as_slice)
    }

    pub fn first_sense(&self, lemma: &str, pos: &str) -> Option<&str> {
        self.senses(lemma, pos).and_then(|s| s.first()).map(String::as_str)
    }

    /// Position of `sense` in the (lemma, pos) entry.
    pub fn rank(&self, lemma: &str, pos: &str, sense: &str) -> Option<usize> {
        self.senses(lemma, pos)?.iter().position(|s| s == sense)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &[String])> {
        self.entries.iter().map(|((l, p), s)| (l.as_str(), p.as_str(), s.as_slice()))
    }

    /// Sorts `senses` by inventory order for (lemma, pos), unknown senses
    /// last, ties broken lexicographically.
    pub fn order_senses(&self, lemma: &str, pos: &str, senses: &mut [String]) {
        senses.sort_by(|a, b| {
            let ra = self.rank(lemma, pos, a).unwrap_or(usize::MAX);
            let rb = self.rank(lemma, pos, b).unwrap_or(usize::MAX);
            ra.cmp(&rb).then_with(|| a.cmp(b))
        });
    }
}

/// Undirected sense graph used for path similarity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    edges: usize,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node if absent and returns its index.
    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.to_owned(), i);
        self.names.push(name.to_owned());
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds an undirected edge, creating missing endpoints. Repeated edges
    /// are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<()> {
        if a == b {
            return Err(Error::SelfLoop(a.to_owned()));
        }
        let ia = self.add_node(a);
        let ib = self.add_node(b);
        if !self.adjacency[ia].contains(&ib) {
            self.adjacency[ia].push(ib);
            self.adjacency[ib].push(ia);
            self.edges += 1;
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Each edge once, in insertion order of the first endpoint.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::with_capacity(self.edges);
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs {
                if i < j {
                    out.push((self.names[i].as_str(), self.names[j].as_str()));
                }
            }
        }
        out
    }

    /// Undirected shortest-path edge count; `Ok(None)` when disconnected.
    pub fn shortest_path(&self, a: &str, b: &str) -> Result<Option<usize>> {
        let ia = *self.index.get(a).ok_or_else(|| Error::UnknownSense(a.to_owned()))?;
        let ib = *self.index.get(b).ok_or_else(|| Error::UnknownSense(b.to_owned()))?;
        if ia == ib {
            return Ok(Some(0));
        }
        let mut dist = vec![usize::MAX; self.names.len()];
        let mut queue = VecDeque::new();
        dist[ia] = 0;
        queue.push_back(ia);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    if v == ib {
                        return Ok(Some(dist[v]));
                    }
                    queue.push_back(v);
                }
            }
        }
        Ok(None)
    }
}
