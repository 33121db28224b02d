//! KNN word sense disambiguation baselines, most-frequent-sense, and micro
//! precision/recall/F1 scoring.
//!
//! All distances are cosine distances and candidates are restricted to the
//! senses or occurrences of the query's own (lemma, pos).

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{EmbeddingRecord, LemmaKey, SenseInventory};
use crate::linalg::{cosine_distance, mean_vector, norm_sq};
use crate::{Error, Result};

/// Cap of the word-based neighbor count.
pub const WORD_K_CAP: usize = 5;

fn key(lemma: &str, pos: &str) -> LemmaKey {
    (lemma.to_owned(), pos.to_owned())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseCentroid {
    pub sense_id: String,
    pub centroid: Vec<f64>,
    /// Set when the centroid is all zeros (e.g. everything masked away).
    pub degenerate: bool,
}

/// Per-lemma sense vectors: the mean of the lemma's occurrences of each sense.
#[derive(Debug, Clone, Default)]
pub struct SenseCentroidIndex {
    entries: BTreeMap<LemmaKey, Vec<SenseCentroid>>,
}

impl SenseCentroidIndex {
    /// Centroids sorted by sense id.
    pub fn centroids(&self, lemma: &str, pos: &str) -> Option<&[SenseCentroid]> {
        self.entries.get(&key(lemma, pos)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Occurrence {
    pub vector: Vec<f64>,
    pub sense_id: String,
}

/// Labeled training occurrences per (lemma, pos), in input order.
#[derive(Debug, Clone, Default)]
pub struct LemmaOccurrenceIndex {
    entries: BTreeMap<LemmaKey, Vec<Occurrence>>,
}

impl LemmaOccurrenceIndex {
    pub fn occurrences(&self, lemma: &str, pos: &str) -> Option<&[Occurrence]> {
        self.entries.get(&key(lemma, pos)).map(Vec::as_slice)
    }

    pub fn count(&self, lemma: &str, pos: &str) -> usize {
        self.occurrences(lemma, pos).map_or(0, <[Occurrence]>::len)
    }

    /// Distinct attested senses, sorted.
    pub fn senses(&self, lemma: &str, pos: &str) -> Vec<String> {
        let set: BTreeSet<&str> =
            self.occurrences(lemma, pos).unwrap_or(&[]).iter().map(|o| o.sense_id.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Training frequency of each attested sense.
    pub fn sense_counts(&self, lemma: &str, pos: &str) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for o in self.occurrences(lemma, pos).unwrap_or(&[]) {
            *counts.entry(o.sense_id.as_str()).or_insert(0) += 1;
        }
        counts
    }

    pub fn lemmas(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.keys().map(|(l, p)| (l.as_str(), p.as_str()))
    }

    pub fn push(&mut self, lemma: &str, pos: &str, sense_id: &str, vector: Vec<f64>) {
        self.entries.entry(key(lemma, pos)).or_default().push(Occurrence { vector, sense_id: sense_id.to_owned() });
    }

    /// Rebuilds the index with every vector passed through `f`.
    pub fn map_vectors(&self, mut f: impl FnMut(&str, &str, &[f64]) -> Vec<f64>) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|((l, p), occs)| {
                let occs = occs
                    .iter()
                    .map(|o| Occurrence { vector: f(l, p, &o.vector), sense_id: o.sense_id.clone() })
                    .collect();
                ((l.clone(), p.clone()), occs)
            })
            .collect();
        LemmaOccurrenceIndex { entries }
    }
}

/// Groups labeled records per (lemma, pos). Unlabeled records are ignored.
pub fn build_word_index<'a, I>(records: I) -> LemmaOccurrenceIndex
where
    I: IntoIterator<Item = &'a EmbeddingRecord>,
{
    let mut index = LemmaOccurrenceIndex::default();
    for r in records {
        if let Some(sense) = &r.sense_id {
            index.push(&r.lemma, &r.pos, sense, r.vector_f64());
        }
    }
    index
}

/// Averages each lemma's occurrences per sense.
pub fn build_sense_index(words: &LemmaOccurrenceIndex) -> SenseCentroidIndex {
    let mut entries = BTreeMap::new();
    for (k, occs) in &words.entries {
        let mut by_sense: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
        for o in occs {
            by_sense.entry(o.sense_id.as_str()).or_default().push(&o.vector);
        }
        let centroids = by_sense
            .into_iter()
            .map(|(sense, vs)| {
                let centroid = mean_vector(&vs);
                let degenerate = norm_sq(&centroid) == 0.0;
                SenseCentroid { sense_id: sense.to_owned(), centroid, degenerate }
            })
            .collect();
        entries.insert(k.clone(), centroids);
    }
    SenseCentroidIndex { entries }
}

/// A token to disambiguate.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub instance_id: &'a str,
    pub lemma: &'a str,
    pub pos: &'a str,
    pub vector: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Knn,
    Fallback,
    Mfs,
    None,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Knn => "knn",
            Source::Fallback => "fallback",
            Source::Mfs => "mfs",
            Source::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub instance_id: String,
    pub sense_id: Option<String>,
    pub source: Source,
}

impl Prediction {
    fn new(query: &Query<'_>, sense: Option<&str>, source: Source) -> Self {
        Prediction { instance_id: query.instance_id.to_owned(), sense_id: sense.map(str::to_owned), source }
    }
}

fn unseen(query: &Query<'_>, inventory: Option<&SenseInventory>, fallback: bool) -> Prediction {
    let first = if fallback { inventory.and_then(|inv| inv.first_sense(query.lemma, query.pos)) } else { None };
    match first {
        Some(s) => Prediction::new(query, Some(s), Source::Fallback),
        None => Prediction::new(query, None, Source::None),
    }
}

/// Nearest sense centroid (k = 1). Equidistant centroids resolve to the
/// lexicographically lower sense id.
pub fn predict_sense_knn(
    query: &Query<'_>,
    index: &SenseCentroidIndex,
    inventory: Option<&SenseInventory>,
    fallback: bool,
) -> Prediction {
    let Some(centroids) = index.centroids(query.lemma, query.pos).filter(|c| !c.is_empty()) else {
        return unseen(query, inventory, fallback);
    };
    let mut best: Option<(&str, f64)> = None;
    for c in centroids {
        let d = cosine_distance(query.vector, &c.centroid);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((&c.sense_id, d));
        }
    }
    Prediction::new(query, best.map(|(s, _)| s), Source::Knn)
}

/// Neighbor count for a lemma with `occurrences` training tokens.
pub fn word_k(occurrences: usize) -> usize {
    occurrences.min(WORD_K_CAP)
}

/// Majority vote among the `k` nearest occurrences, with `k` from
/// [`word_k`] unless `k_override` is given. Neighbors at equal distance are
/// ordered by occurrence index; a vote tie goes to the tied label with the
/// nearest neighbor.
pub fn predict_word_knn(
    query: &Query<'_>,
    index: &LemmaOccurrenceIndex,
    inventory: Option<&SenseInventory>,
    fallback: bool,
    k_override: Option<usize>,
) -> Prediction {
    let Some(occs) = index.occurrences(query.lemma, query.pos).filter(|o| !o.is_empty()) else {
        return unseen(query, inventory, fallback);
    };
    let k = k_override.unwrap_or_else(|| word_k(occs.len())).clamp(1, occs.len());
    let mut ranked: Vec<(f64, usize)> =
        occs.iter().enumerate().map(|(i, o)| (cosine_distance(query.vector, &o.vector), i)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &ranked[..k];
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for &(_, i) in nearest {
        *votes.entry(occs[i].sense_id.as_str()).or_insert(0) += 1;
    }
    let top = votes.values().copied().max().unwrap_or(0);
    let winner = nearest.iter().map(|&(_, i)| occs[i].sense_id.as_str()).find(|s| votes[s] == top);
    Prediction::new(query, winner, Source::Knn)
}

/// Most frequent training sense of the lemma; frequency ties follow
/// inventory order, then sense id.
pub fn predict_mfs(
    query: &Query<'_>,
    index: &LemmaOccurrenceIndex,
    inventory: Option<&SenseInventory>,
    fallback: bool,
) -> Prediction {
    let counts = index.sense_counts(query.lemma, query.pos);
    if counts.is_empty() {
        return unseen(query, inventory, fallback);
    }
    let rank = |s: &str| inventory.and_then(|inv| inv.rank(query.lemma, query.pos, s)).unwrap_or(usize::MAX);
    let best = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| rank(b.0).cmp(&rank(a.0))).then_with(|| b.0.cmp(a.0)))
        .map(|(s, _)| *s);
    Prediction::new(query, best, Source::Mfs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub attempted: usize,
    pub correct: usize,
    pub total: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.attempted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.total)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Micro-averaged scores, overall and per dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: Counts,
    /// Keyed by the instance id prefix before the first `.`.
    pub per_dataset: BTreeMap<String, Counts>,
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.overall.precision()
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall()
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1()
    }
}

/// Gold senses per instance; a prediction is correct if it matches any.
pub type GoldKey = BTreeMap<String, Vec<String>>;

pub fn dataset_of(instance_id: &str) -> &str {
    instance_id.split_once('.').map_or("all", |(d, _)| d)
}

/// Scores predictions against `gold`. Predictions without a sense count as
/// unattempted; gold instances without a prediction count towards recall.
pub fn evaluate_f1(predictions: &[Prediction], gold: &GoldKey) -> Result<EvalReport> {
    let mut seen = BTreeSet::new();
    let mut per_dataset: BTreeMap<String, Counts> = BTreeMap::new();
    for id in gold.keys() {
        per_dataset.entry(dataset_of(id).to_owned()).or_default().total += 1;
    }
    for p in predictions {
        let senses = gold.get(&p.instance_id).ok_or_else(|| Error::UnknownInstance(p.instance_id.clone()))?;
        if !seen.insert(p.instance_id.as_str()) {
            return Err(Error::DuplicatePrediction(p.instance_id.clone()));
        }
        let Some(sense) = &p.sense_id else { continue };
        let c = per_dataset.get_mut(dataset_of(&p.instance_id)).expect("dataset counted above");
        c.attempted += 1;
        if senses.contains(sense) {
            c.correct += 1;
        }
    }
    let overall = per_dataset.values().fold(Counts::default(), |acc, c| Counts {
        attempted: acc.attempted + c.attempted,
        correct: acc.correct + c.correct,
        total: acc.total + c.total,
    });
    Ok(EvalReport { overall, per_dataset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn q<'a>(lemma: &'a str, v: &'a [f64]) -> Query<'a> {
        Query { instance_id: "q", lemma, pos: "n", vector: v }
    }

    fn index(items: &[(&str, &str, [f64; 2])]) -> LemmaOccurrenceIndex {
        let mut idx = LemmaOccurrenceIndex::default();
        for (l, s, v) in items {
            idx.push(l, "n", s, v.to_vec());
        }
        idx
    }

    #[test]
    fn centroids() {
        let idx = index(&[
            ("bank", "b1", [1.0, 0.0]),
            ("bank", "b1", [0.0, 1.0]),
            ("bank", "b1", [1.0, 1.0]),
            ("bank", "b2", [3.0, -1.0]),
        ]);
        let s = build_sense_index(&idx);
        let c = s.centroids("bank", "n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].centroid, [3.0, -1.0]);
        assert!((c[0].centroid[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(idx.count("bank", "n"), 4);

        let half = index(&[("x", "s", [1.0, 0.0]), ("x", "s", [0.0, 1.0])]);
        assert_eq!(build_sense_index(&half).centroids("x", "n").unwrap()[0].centroid, [0.5, 0.5]);
    }

    #[test]
    fn sense_knn_ties_and_fallback() {
        let idx = index(&[("bank", "b2", [1.0, 0.0]), ("bank", "b1", [0.0, 1.0])]);
        let s = build_sense_index(&idx);
        let p = predict_sense_knn(&q("bank", &[1.0, 1.0]), &s, None, false);
        assert_eq!(p.sense_id.as_deref(), Some("b1"));
        assert_eq!(p.source, Source::Knn);

        let mut inv = SenseInventory::new();
        inv.insert("river", "n", vec!["river%1".into(), "river%2".into()]).unwrap();
        let p = predict_sense_knn(&q("river", &[1.0, 1.0]), &s, Some(&inv), true);
        assert_eq!((p.sense_id.as_deref(), p.source), (Some("river%1"), Source::Fallback));
        let p = predict_sense_knn(&q("river", &[1.0, 1.0]), &s, Some(&inv), false);
        assert_eq!((p.sense_id, p.source), (None, Source::None));
        let p = predict_sense_knn(&q("lake", &[1.0, 1.0]), &s, Some(&inv), true);
        assert_eq!((p.sense_id, p.source), (None, Source::None));
    }

    #[test]
    fn word_k_rule() {
        assert_eq!(word_k(3), 3);
        assert_eq!(word_k(10), 5);
    }

    #[test]
    fn word_knn_vote_tie_goes_to_nearest() {
        // Four neighbors, 2-2 split; the closest one carries "b".
        let idx =
            index(&[("w", "a", [1.0, 0.2]), ("w", "b", [1.0, 0.01]), ("w", "a", [1.0, 0.3]), ("w", "b", [1.0, 0.4])]);
        let p = predict_word_knn(&q("w", &[1.0, 0.0]), &idx, None, false, None);
        assert_eq!(p.sense_id.as_deref(), Some("b"));
    }

    #[test]
    fn word_knn_majority() {
        let idx =
            index(&[("w", "a", [1.0, 0.0]), ("w", "b", [0.9, 0.1]), ("w", "b", [0.8, 0.2]), ("w", "c", [-1.0, 0.0])]);
        let p = predict_word_knn(&q("w", &[1.0, 0.0]), &idx, None, false, Some(3));
        assert_eq!(p.sense_id.as_deref(), Some("b"));
    }

    #[test]
    fn mfs_rules() {
        let idx = index(&[
            ("w", "s1", [1.0, 0.0]),
            ("w", "s1", [1.0, 0.0]),
            ("w", "s1", [1.0, 0.0]),
            ("w", "s2", [1.0, 0.0]),
            ("t", "s1", [1.0, 0.0]),
            ("t", "s1", [1.0, 0.0]),
            ("t", "s2", [1.0, 0.0]),
            ("t", "s2", [1.0, 0.0]),
        ]);
        assert_eq!(predict_mfs(&q("w", &[]), &idx, None, false).sense_id.as_deref(), Some("s1"));
        let mut inv = SenseInventory::new();
        inv.insert("t", "n", vec!["s2".into(), "s1".into()]).unwrap();
        inv.insert("u", "n", vec!["u1".into()]).unwrap();
        assert_eq!(predict_mfs(&q("t", &[]), &idx, Some(&inv), false).sense_id.as_deref(), Some("s2"));
        assert_eq!(predict_mfs(&q("t", &[]), &idx, None, false).sense_id.as_deref(), Some("s1"));
        let p = predict_mfs(&q("u", &[]), &idx, Some(&inv), true);
        assert_eq!((p.sense_id.as_deref(), p.source), (Some("u1"), Source::Fallback));
    }

    fn pred(id: &str, sense: Option<&str>) -> Prediction {
        Prediction { instance_id: id.to_string(), sense_id: sense.map(str::to_string), source: Source::Knn }
    }

    fn gold(items: &[(&str, &str)]) -> GoldKey {
        items.iter().map(|(i, s)| (i.to_string(), vec![s.to_string()])).collect()
    }

    #[test]
    fn f1_examples() {
        let g = gold(&[("a", "x"), ("b", "x"), ("c", "y"), ("d", "y")]);
        let r =
            evaluate_f1(&[pred("a", Some("x")), pred("b", Some("x")), pred("c", Some("y")), pred("d", Some("x"))], &g)
                .unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.75, 0.75, 0.75));

        let r = evaluate_f1(&[pred("a", Some("x")), pred("b", Some("x")), pred("c", None)], &g).unwrap();
        assert_eq!((r.precision(), r.recall()), (1.0, 0.5));
        assert!((r.f1() - 2.0 / 3.0).abs() < 1e-15);

        assert_eq!(evaluate_f1(&[pred("zz", Some("x"))], &g).unwrap_err(), Error::UnknownInstance("zz".into()));
        assert!(evaluate_f1(&[pred("a", Some("x")), pred("a", Some("x"))], &g).is_err());
        assert_eq!(evaluate_f1(&[], &g).unwrap().f1(), 0.0);
    }

    #[test]
    fn f1_per_dataset() {
        let g = gold(&[("se2.a", "x"), ("se2.b", "x"), ("se3.c", "y")]);
        let r = evaluate_f1(&[pred("se2.a", Some("x")), pred("se3.c", Some("x"))], &g).unwrap();
        assert_eq!(r.per_dataset["se2"], Counts { attempted: 1, correct: 1, total: 2 });
        assert_eq!(r.per_dataset["se3"], Counts { attempted: 1, correct: 0, total: 1 });
    }
}
