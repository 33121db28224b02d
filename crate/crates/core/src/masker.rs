//! Threshold masks derived from trained weights, and per-token mask
//! selection at inference time.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::SenseInventory;
use crate::knn::{predict_word_knn, word_k, LemmaOccurrenceIndex, Prediction, Query, Source};
use crate::linalg::{cosine, cosine_distance, norm_sq};
use crate::{Error, Result};

/// `floor(fraction · dim)`, tolerant of products that land a hair below an
/// integer (`0.29 · 100 = 28.999…`).
pub fn fraction_count(fraction: f64, dim: usize) -> usize {
    let x = fraction * dim as f64;
    let x = libm::floor(x + 1e-9 * x.abs().max(1.0));
    (x.max(0.0) as usize).min(dim)
}

/// How a threshold mask was derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskRule {
    /// Zero the `floor(p·D)` lowest-weight dimensions.
    Percentile(f64),
    /// Zero every dimension with weight below `τ`.
    Absolute(f64),
}

impl fmt::Display for MaskRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskRule::Percentile(p) => write!(f, "p={p}"),
            MaskRule::Absolute(t) => write!(f, "tau={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMask {
    pub sense_id: String,
    keep: Vec<bool>,
    pub rule: MaskRule,
    n_masked: usize,
}

impl ThresholdMask {
    pub fn from_keep(sense_id: impl Into<String>, keep: Vec<bool>, rule: MaskRule) -> Self {
        let n_masked = keep.iter().filter(|k| !**k).count();
        ThresholdMask { sense_id: sense_id.into(), keep, rule, n_masked }
    }

    pub fn from_zero_positions(
        sense_id: impl Into<String>,
        dim: usize,
        zeros: &[usize],
        rule: MaskRule,
    ) -> Result<Self> {
        let mut keep = vec![true; dim];
        for &z in zeros {
            *keep.get_mut(z).ok_or(Error::LengthMismatch { left: z + 1, right: dim })? = false;
        }
        Ok(Self::from_keep(sense_id, keep, rule))
    }

    /// Zeros the `floor(p·D)` lowest-weight dimensions, lower index first
    /// among equal weights.
    pub fn percentile(sense_id: impl Into<String>, w: &[f64], p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(alloc::format!("percentile {p} outside [0, 1]")));
        }
        let mut keep = vec![true; w.len()];
        for d in lowest_dims(w, fraction_count(p, w.len())) {
            keep[d] = false;
        }
        Ok(Self::from_keep(sense_id, keep, MaskRule::Percentile(p)))
    }

    /// Zeros every dimension with `w_d < tau`.
    pub fn absolute(sense_id: impl Into<String>, w: &[f64], tau: f64) -> Self {
        let keep = w.iter().map(|&x| x.partial_cmp(&tau) != Some(core::cmp::Ordering::Less)).collect();
        Self::from_keep(sense_id, keep, MaskRule::Absolute(tau))
    }

    pub fn from_rule(sense_id: impl Into<String>, w: &[f64], rule: MaskRule) -> Result<Self> {
        match rule {
            MaskRule::Percentile(p) => Self::percentile(sense_id, w, p),
            MaskRule::Absolute(t) => Ok(Self::absolute(sense_id, w, t)),
        }
    }

    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// Number of zeroed dimensions.
    pub fn n_masked(&self) -> usize {
        self.n_masked
    }

    pub fn zero_positions(&self) -> Vec<usize> {
        self.keep.iter().enumerate().filter(|(_, k)| !**k).map(|(d, _)| d).collect()
    }

    /// Keeps exactly the dimensions this mask zeros.
    pub fn complement(&self) -> Self {
        Self::from_keep(self.sense_id.clone(), self.keep.iter().map(|k| !k).collect(), self.rule)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        apply_mask(v, &self.keep)
    }
}

/// Indices of the `count` smallest weights; ties go to the lower index.
pub fn lowest_dims(w: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Elementwise product with the mask bits.
pub fn apply_mask(v: &[f64], keep: &[bool]) -> Result<Vec<f64>> {
    if v.len() != keep.len() {
        return Err(Error::LengthMismatch { left: v.len(), right: keep.len() });
    }
    Ok(v.iter().zip(keep).map(|(&x, &k)| if k { x } else { 0.0 }).collect())
}

pub type MaskStore = BTreeMap<String, ThresholdMask>;

/// Builds one mask per weight vector.
pub fn masks_from_weights<'a, I>(weights: I, rule: MaskRule) -> Result<MaskStore>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    weights.into_iter().map(|(sense, w)| Ok((sense.to_owned(), ThresholdMask::from_rule(sense, w, rule)?))).collect()
}

/// Outcome of trying every candidate sense mask on one token.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSelection {
    pub chosen_sense: String,
    /// Sum of cosine distances to the k nearest masked neighbors.
    pub d: f64,
    /// `d` per candidate, in candidate order.
    pub per_sense: Vec<(String, f64)>,
    pub k: usize,
    /// Zero vectors met while masking (query or neighbors).
    pub warnings: usize,
}

/// Sum of the `k` smallest cosine distances from `query` to `neighbors`,
/// capping `k` at the neighbor count. Zero neighbors sit at distance 1.
pub fn knn_distance_sum<V: AsRef<[f64]>>(query: &[f64], neighbors: &[V], k: usize) -> f64 {
    let mut dists: Vec<f64> = neighbors.iter().map(|n| cosine_distance(query, n.as_ref())).collect();
    dists.sort_by(f64::total_cmp);
    dists.iter().take(k).sum()
}

/// Tries the mask of every sense of (lemma, pos) attested in `index` and
/// keeps the one whose masked query lies closest to its `k` nearest masked
/// training neighbors. The mask is applied to the query and the neighbors
/// alike.
///
/// Candidates are ranked by inventory order then sense id, and the first
/// minimal `d` wins. Returns `None` when the lemma has no attested sense with
/// a mask, meaning the caller should fall back.
pub fn select_mask_for_token(
    query: &[f64],
    lemma: &str,
    pos: &str,
    masks: &MaskStore,
    index: &LemmaOccurrenceIndex,
    inventory: Option<&SenseInventory>,
    k: usize,
) -> Result<Option<MaskSelection>> {
    let Some(occurrences) = index.occurrences(lemma, pos) else {
        return Ok(None);
    };
    let mut candidates: Vec<String> =
        index.senses(lemma, pos).into_iter().filter(|s| masks.contains_key(s.as_str())).collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    match inventory {
        Some(inv) => inv.order_senses(lemma, pos, &mut candidates),
        None => candidates.sort(),
    }
    let k = k.min(occurrences.len());
    let mut warnings = 0;
    let mut per_sense = Vec::with_capacity(candidates.len());
    for sense in candidates {
        let mask = &masks[sense.as_str()];
        let q = mask.apply(query)?;
        if norm_sq(&q) == 0.0 {
            warnings += 1;
            per_sense.push((sense, f64::INFINITY));
            continue;
        }
        let mut dists = Vec::with_capacity(occurrences.len());
        for occ in occurrences {
            let n = mask.apply(&occ.vector)?;
            let c = cosine(&q, &n).unwrap_or_else(|| {
                warnings += 1;
                0.0
            });
            dists.push(1.0 - c);
        }
        dists.sort_by(f64::total_cmp);
        per_sense.push((sense, dists.iter().take(k).sum()));
    }
    let (chosen, d) = per_sense
        .iter()
        .fold(None::<(&String, f64)>, |best, (s, d)| match best {
            Some((_, bd)) if d.partial_cmp(&bd) != Some(core::cmp::Ordering::Less) => best,
            _ => Some((s, *d)),
        })
        .expect("non-empty candidates");
    Ok(Some(MaskSelection { chosen_sense: chosen.clone(), d, per_sense: per_sense.clone(), k, warnings }))
}

/// Word-KNN in the masked space picked by [`select_mask_for_token`]: the
/// chosen mask is applied to the query and to every training occurrence of the
/// lemma before voting. The selection itself uses the same `k` as the vote.
/// Tokens without a candidate mask get the plain unmasked prediction (or the
/// fallback when the lemma is unseen).
pub fn predict_masked_word_knn(
    query: &Query<'_>,
    index: &LemmaOccurrenceIndex,
    masks: &MaskStore,
    inventory: Option<&SenseInventory>,
    fallback: bool,
) -> Result<(Prediction, Option<MaskSelection>)> {
    let k = word_k(index.count(query.lemma, query.pos));
    let selection = select_mask_for_token(query.vector, query.lemma, query.pos, masks, index, inventory, k)?;
    let Some(sel) = selection else {
        return Ok((predict_word_knn(query, index, inventory, fallback, None), None));
    };
    let mask = &masks[sel.chosen_sense.as_str()];
    let mut local = LemmaOccurrenceIndex::default();
    for occ in index.occurrences(query.lemma, query.pos).unwrap_or(&[]) {
        local.push(query.lemma, query.pos, &occ.sense_id, mask.apply(&occ.vector)?);
    }
    let masked = mask.apply(query.vector)?;
    let q = Query { vector: &masked, ..*query };
    Ok((predict_word_knn(&q, &local, inventory, fallback, None), Some(sel)))
}

/// The sense whose mask won the selection, used directly as the answer.
pub fn selection_prediction(query: &Query<'_>, selection: &MaskSelection) -> Prediction {
    Prediction {
        instance_id: query.instance_id.to_owned(),
        sense_id: Some(selection.chosen_sense.clone()),
        source: Source::Knn,
    }
}
