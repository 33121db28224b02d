//! Synthetic sense-group corpora with planted signal dimensions.
//!
//! Every sense owns a set of signal dimensions. Its members are
//! `μ·indicator(signal) + N(0, σ²)` on all dimensions, so only the signal
//! dimensions carry group structure. Senses are leaves of a balanced
//! taxonomy, and each internal node contributes a chunk of signal dimensions
//! to all leaves below it: senses that are close in the taxonomy share more
//! signal dimensions and therefore have more similar centroids.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{EmbeddingRecord, EmbeddingSet, SenseInventory, Taxonomy};
use crate::knn::GoldKey;
use crate::masker::{fraction_count, lowest_dims};
use crate::{Error, Result};

pub const SYNTH_MODEL_ID: &str = "synth";
pub const SYNTH_POS: &str = "n";
pub const TAXONOMY_ROOT: &str = "root";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_groups: usize,
    pub group_size: usize,
    pub dim: usize,
    pub signal_dims: usize,
    pub signal_strength: f64,
    pub noise_sigma: f64,
    pub taxonomy_depth: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_groups: 20,
            group_size: 100,
            dim: 64,
            signal_dims: 32,
            signal_strength: 1.0,
            noise_sigma: 0.5,
            taxonomy_depth: 3,
            test_fraction: 0.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Held-out members per group.
    pub fn test_per_group(&self) -> usize {
        fraction_count(self.test_fraction, self.group_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_groups < 2 {
            return bad("at least 2 groups are needed to form lemmas");
        }
        if self.group_size < 2 {
            return bad("group_size must be at least 2");
        }
        if self.dim == 0 || self.signal_dims > self.dim {
            return bad("signal_dims must not exceed dim");
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return bad("test_fraction must lie in [0, 1)");
        }
        if self.group_size - self.test_per_group() < 2 {
            return bad("fewer than 2 labeled members per group");
        }
        if self.taxonomy_depth == 0 {
            return bad("taxonomy_depth must be at least 1");
        }
        if !(self.signal_strength.is_finite() && self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("signal_strength and noise_sigma must be finite, sigma non-negative");
        }
        if self.noise_sigma == 0.0 && (self.signal_dims == 0 || self.signal_strength == 0.0) {
            return bad("noise-free groups without signal would be zero vectors");
        }
        Ok(())
    }
}

/// Ground truth behind a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    /// Sorted signal dimensions per sense.
    pub signal_dims: BTreeMap<String, Vec<usize>>,
    pub taxonomy: Taxonomy,
}

impl PlantedTruth {
    pub fn is_noise(&self, sense: &str, dim: usize) -> bool {
        self.signal_dims.get(sense).is_some_and(|s| s.binary_search(&dim).is_err())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Labeled training records.
    pub train: EmbeddingSet,
    /// Unlabeled held-out records; `None` when `test_fraction` is 0.
    pub test: Option<EmbeddingSet>,
    pub gold: GoldKey,
    pub inventory: SenseInventory,
    pub truth: PlantedTruth,
}

/// Sense id `lemNNN.n.KK` (KK 1-based within the lemma).
fn sense_name(lemma: usize, k: usize) -> String {
    format!("lem{lemma:03}.{SYNTH_POS}.{:02}", k + 1)
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Lemmas of 2..=4 senses; a trailing singleton joins the previous lemma.
    let mut sizes = Vec::new();
    let mut left = config.n_groups;
    while left > 0 {
        let s = rng.random_range(2..=4usize).min(left);
        sizes.push(s);
        left -= s;
    }
    if sizes.len() > 1 && *sizes.last().unwrap() == 1 {
        sizes.pop();
        *sizes.last_mut().unwrap() += 1;
    }
    let mut senses = Vec::with_capacity(config.n_groups);
    let mut inventory = SenseInventory::new();
    for (lemma, &size) in sizes.iter().enumerate() {
        let names: Vec<String> = (0..size).map(|k| sense_name(lemma, k)).collect();
        for n in &names {
            senses.push((format!("lem{lemma:03}"), n.clone()));
        }
        inventory.insert(&format!("lem{lemma:03}"), SYNTH_POS, names)?;
    }

    let (taxonomy, signal_dims) = plant_taxonomy(config, &senses, &mut rng)?;

    let test_per_group = config.test_per_group();
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut gold = GoldKey::new();
    for (g, (lemma, sense)) in senses.iter().enumerate() {
        let signal = &signal_dims[sense];
        for m in 0..config.group_size {
            let vector: Vec<f32> = (0..config.dim)
                .map(|d| {
                    let base = if signal.binary_search(&d).is_ok() { config.signal_strength } else { 0.0 };
                    let z: f64 = rng.sample(StandardNormal);
                    (base + config.noise_sigma * z) as f32
                })
                .collect();
            let held_out = m >= config.group_size - test_per_group;
            let split = if held_out { "test" } else { "train" };
            let instance_id = format!("synth-{split}.g{g:03}.t{m:04}");
            if held_out {
                gold.insert(instance_id.clone(), alloc::vec![sense.clone()]);
            }
            let record = EmbeddingRecord {
                instance_id,
                lemma: lemma.clone(),
                pos: SYNTH_POS.to_string(),
                sense_id: (!held_out).then(|| sense.clone()),
                layer: 0,
                vector,
            };
            if held_out {
                test.push(record);
            } else {
                train.push(record);
            }
        }
    }
    let train = EmbeddingSet::new(SYNTH_MODEL_ID, train)?;
    let test = if test.is_empty() { None } else { Some(EmbeddingSet::new(SYNTH_MODEL_ID, test)?) };
    Ok(SynthCorpus { train, test, gold, inventory, truth: PlantedTruth { signal_dims, taxonomy } })
}

/// Builds a balanced tree with the senses as leaves and assigns signal
/// dimensions: each non-root internal node draws `signal_dims / depth`
/// dimensions shared by its leaves, and each leaf tops its set up with
/// private draws to exactly `signal_dims`.
fn plant_taxonomy(
    config: &SynthConfig,
    senses: &[(String, String)],
    rng: &mut ChaCha8Rng,
) -> Result<(Taxonomy, BTreeMap<String, Vec<usize>>)> {
    let depth = config.taxonomy_depth;
    let n = senses.len();
    let mut branching = 2usize;
    while branching.checked_pow(depth as u32).is_some_and(|leaves| leaves < n) {
        branching += 1;
    }
    let chunk = config.signal_dims / depth;
    let mut taxonomy = Taxonomy::new();
    taxonomy.add_node(TAXONOMY_ROOT);
    let mut node_dims: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let all: Vec<usize> = (0..config.dim).collect();
    let mut signal = BTreeMap::new();
    for (leaf, (_, sense)) in senses.iter().enumerate() {
        let mut parent = TAXONOMY_ROOT.to_string();
        let mut dims = BTreeSet::new();
        for level in 1..depth {
            let span = branching.pow((depth - level) as u32);
            let name = format!("syn.{level}.{}", leaf / span);
            taxonomy.add_edge(&parent, &name)?;
            let chunk_dims =
                node_dims.entry(name.clone()).or_insert_with(|| all.choose_multiple(rng, chunk).copied().collect());
            dims.extend(chunk_dims.iter().copied());
            parent = name;
        }
        taxonomy.add_edge(&parent, sense)?;
        let mut free: Vec<usize> = all.iter().copied().filter(|d| !dims.contains(d)).collect();
        free.shuffle(rng);
        let missing = config.signal_dims.saturating_sub(dims.len());
        dims.extend(free.into_iter().take(missing));
        signal.insert(sense.clone(), dims.into_iter().collect());
    }
    Ok((taxonomy, signal))
}

/// Fraction of the `floor(p·D)` lowest-weight dimensions that are noise for
/// `sense`. An empty selection scores 1.
pub fn recovery_score(w: &[f64], truth: &PlantedTruth, sense: &str, p: f64) -> Result<f64> {
    let signal = truth.signal_dims.get(sense).ok_or_else(|| Error::UnknownSense(sense.to_string()))?;
    Ok(recovery_from_signal(w, signal, p))
}

/// [`recovery_score`] against an explicit sorted signal set.
pub fn recovery_from_signal(w: &[f64], signal: &[usize], p: f64) -> f64 {
    let lowest = lowest_dims(w, fraction_count(p, w.len()));
    if lowest.is_empty() {
        return 1.0;
    }
    let noise = lowest.iter().filter(|d| signal.binary_search(d).is_err()).count();
    noise as f64 / lowest.len() as f64
}
