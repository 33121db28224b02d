//! Intrinsic evaluations of sense groups: within-group cosine, rank
//! correlation of centroid similarity against taxonomy path similarity, a
//! Fisher LDA projection, and a probe of the discarded dimensions.

use alloc::borrow::ToOwned;
use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::corpus::{SenseGroup, Taxonomy};
use crate::linalg::{cosine, dot, mean_pairwise_cosine, mean_vector, norm, norm_sq, SquareMatrix};
use crate::masker::{apply_mask, MaskRule, MaskStore};
use crate::swt::WeightStore;
use crate::{Error, Result};

/// Default minimum group size (exclusive) for the correlation analysis.
pub const DEFAULT_MIN_SIZE: usize = 100;
/// Default ridge added to the within-class scatter.
pub const DEFAULT_RIDGE: f64 = 1e-6;

fn masked_vectors(group: &SenseGroup<'_>, masks: Option<&MaskStore>) -> Result<Option<Vec<Vec<f64>>>> {
    let vectors = group.vectors();
    match masks {
        None => Ok(Some(vectors)),
        Some(store) => match store.get(group.sense_id) {
            None => Ok(None),
            Some(mask) => vectors.iter().map(|v| mask.apply(v)).collect::<Result<_>>().map(Some),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinGroupCosine {
    /// Mean pairwise cosine per group, in input order.
    pub per_group: Vec<(String, f64)>,
    /// Mean of the per-group means.
    pub overall: f64,
    /// Groups left out: fewer than two members, or no mask when masks apply.
    pub skipped: Vec<String>,
    /// Pairs where masking produced a zero vector.
    pub zero_pairs: usize,
}

/// Mean pairwise cosine within each group, optionally after masking each
/// group with its own sense mask.
pub fn within_group_cosine(groups: &[SenseGroup<'_>], masks: Option<&MaskStore>) -> Result<WithinGroupCosine> {
    let mut per_group = Vec::new();
    let mut skipped = Vec::new();
    let mut zero_pairs = 0;
    for g in groups {
        let vectors = match masked_vectors(g, masks)? {
            Some(v) if v.len() >= 2 => v,
            _ => {
                skipped.push(g.sense_id.to_owned());
                continue;
            }
        };
        let (mean, zeros) = mean_pairwise_cosine(&vectors)?;
        zero_pairs += zeros;
        per_group.push((g.sense_id.to_owned(), mean));
    }
    let overall =
        if per_group.is_empty() { 0.0 } else { per_group.iter().map(|(_, c)| c).sum::<f64>() / per_group.len() as f64 };
    Ok(WithinGroupCosine { per_group, overall, skipped, zero_pairs })
}

/// Componentwise mean of the group, masked first when `keep` is given.
pub fn sense_centroid(group: &SenseGroup<'_>, keep: Option<&[bool]>) -> Result<Vec<f64>> {
    if group.is_empty() {
        return Err(Error::DegenerateGroup(0));
    }
    let centroid = mean_vector(&group.vectors());
    match keep {
        Some(k) => apply_mask(&centroid, k),
        None => Ok(centroid),
    }
}

/// `1 / (1 + L)` for shortest path length `L`; 0 when disconnected.
pub fn path_similarity(taxonomy: &Taxonomy, a: &str, b: &str) -> Result<f64> {
    Ok(match taxonomy.shortest_path(a, b)? {
        Some(len) => 1.0 / (1.0 + len as f64),
        None => 0.0,
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's ρ: the Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation("fewer than 3 points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite input"));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mean = (xs.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant ranks"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub model_id: String,
    pub dim: usize,
    pub layer: Option<i32>,
    /// Mean number of zeroed dimensions over the groups used.
    pub n_masked: f64,
    pub rho_original: f64,
    pub rho_masked: f64,
    pub cos_original: f64,
    pub cos_masked: f64,
    pub groups_used: usize,
    pub pairs_used: usize,
    /// Sense pairs left out because their POS tags differ.
    pub cross_pos_excluded: usize,
}

/// Correlation analysis with masks derived from `weights` by `rule`.
pub fn correlation_report(
    groups: &[SenseGroup<'_>],
    weights: &WeightStore,
    taxonomy: &Taxonomy,
    rule: MaskRule,
    min_size: usize,
) -> Result<CorrelationReport> {
    let masks = crate::masker::masks_from_weights(weights.iter().map(|(s, st)| (s.as_str(), st.w.as_slice())), rule)?;
    correlation_report_with_masks(groups, &masks, taxonomy, min_size)
}

/// Uses groups with more than `min_size` members that have a mask. Sense
/// centroids of the original and of the masked vectors are compared pairwise
/// by cosine and each list is rank-correlated with the path similarities of
/// the same sense pairs.
pub fn correlation_report_with_masks(
    groups: &[SenseGroup<'_>],
    masks: &MaskStore,
    taxonomy: &Taxonomy,
    min_size: usize,
) -> Result<CorrelationReport> {
    let retained: Vec<&SenseGroup<'_>> =
        groups.iter().filter(|g| g.len() > min_size && masks.contains_key(g.sense_id)).collect();
    if retained.len() < 3 {
        return Err(Error::UndefinedCorrelation("fewer than 3 retained groups"));
    }
    for g in &retained {
        if !taxonomy.contains(g.sense_id) {
            return Err(Error::UnknownSense(g.sense_id.to_owned()));
        }
    }
    let mut original = Vec::with_capacity(retained.len());
    let mut masked = Vec::with_capacity(retained.len());
    let mut cos_o = 0.0;
    let mut cos_m = 0.0;
    let mut zeros = 0usize;
    for g in &retained {
        let mask = &masks[g.sense_id];
        let vectors = g.vectors();
        let centroid = mean_vector(&vectors);
        masked.push(mask.apply(&centroid)?);
        original.push(centroid);
        cos_o += mean_pairwise_cosine(&vectors)?.0;
        let mv: Vec<Vec<f64>> = vectors.iter().map(|v| mask.apply(v)).collect::<Result<_>>()?;
        cos_m += mean_pairwise_cosine(&mv)?.0;
        zeros += mask.n_masked();
    }
    let n = retained.len() as f64;
    let mut sim_o = Vec::new();
    let mut sim_m = Vec::new();
    let mut paths = Vec::new();
    let mut cross_pos = 0;
    for i in 0..retained.len() {
        for j in i + 1..retained.len() {
            if retained[i].pos() != retained[j].pos() {
                cross_pos += 1;
                continue;
            }
            paths.push(path_similarity(taxonomy, retained[i].sense_id, retained[j].sense_id)?);
            sim_o.push(cosine(&original[i], &original[j]).unwrap_or(0.0));
            sim_m.push(cosine(&masked[i], &masked[j]).unwrap_or(0.0));
        }
    }
    Ok(CorrelationReport {
        model_id: String::new(),
        dim: retained[0].dim,
        layer: retained[0].members.first().map(|r| r.layer),
        n_masked: zeros as f64 / n,
        rho_original: spearman(&sim_o, &paths)?,
        rho_masked: spearman(&sim_m, &paths)?,
        cos_original: cos_o / n,
        cos_masked: cos_m / n,
        groups_used: retained.len(),
        pairs_used: paths.len(),
        cross_pos_excluded: cross_pos,
    })
}

/// Fisher discriminant directions of labeled classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Unit directions, first nonzero coordinate positive.
    pub directions: Vec<Vec<f64>>,
    /// Generalized eigenvalues (between/within variance ratios).
    pub eigenvalues: Vec<f64>,
}

impl LdaModel {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.directions.iter().map(|d| dot(d, x)).collect()
    }
}

const POWER_MAX_ITER: usize = 20_000;
const POWER_TOL: f64 = 1e-13;

/// Top `out_dim` generalized eigenvectors of `(S_W + ridge·I)⁻¹ S_B`.
///
/// With `S_W + ridge·I = L Lᵀ` the problem becomes the symmetric
/// `L⁻¹ S_B L⁻ᵀ y = λ y`, solved by power iteration with deflation;
/// directions are recovered as `L⁻ᵀ y`.
pub fn fit_lda<V: AsRef<[f64]>>(classes: &[Vec<V>], out_dim: usize, ridge: f64) -> Result<LdaModel> {
    if classes.len() < 2 {
        return Err(Error::InvalidConfig("LDA needs at least 2 classes".to_owned()));
    }
    if let Some(c) = classes.iter().find(|c| c.len() < 2) {
        return Err(Error::DegenerateGroup(c.len()));
    }
    let dim = classes[0][0].as_ref().len();
    if out_dim == 0 || out_dim > dim {
        return Err(Error::InvalidConfig(alloc::format!("cannot project {dim} dimensions to {out_dim}")));
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::InvalidConfig("ridge must be non-negative".to_owned()));
    }
    for c in classes {
        for v in c {
            if v.as_ref().len() != dim {
                return Err(Error::LengthMismatch { left: v.as_ref().len(), right: dim });
            }
        }
    }
    let total: usize = classes.iter().map(Vec::len).sum();
    let means: Vec<Vec<f64>> = classes.iter().map(|c| mean_vector(c)).collect();
    let mut grand = vec![0.0; dim];
    for (c, m) in classes.iter().zip(&means) {
        for (g, x) in grand.iter_mut().zip(m) {
            *g += x * c.len() as f64 / total as f64;
        }
    }
    let mut within = SquareMatrix::zeros(dim);
    let mut between = SquareMatrix::zeros(dim);
    let mut diff = vec![0.0; dim];
    for (c, m) in classes.iter().zip(&means) {
        for v in c {
            for ((d, x), mu) in diff.iter_mut().zip(v.as_ref()).zip(m) {
                *d = x - mu;
            }
            within.add_outer(&diff, 1.0);
        }
        for ((d, mu), g) in diff.iter_mut().zip(m).zip(&grand) {
            *d = mu - g;
        }
        between.add_outer(&diff, c.len() as f64);
    }
    within.add_diagonal(ridge);
    let chol = within.cholesky()?;

    // C = L⁻¹ S_B L⁻ᵀ, built column by column.
    let mut half = SquareMatrix::zeros(dim); // S_B L⁻ᵀ
    for j in 0..dim {
        let col: Vec<f64> = (0..dim).map(|i| between.get(i, j)).collect();
        for (i, x) in chol.solve_lower(&col).into_iter().enumerate() {
            half.set(j, i, x);
        }
    }
    let mut c = SquareMatrix::zeros(dim);
    for j in 0..dim {
        let col: Vec<f64> = (0..dim).map(|i| half.get(i, j)).collect();
        for (i, x) in chol.solve_lower(&col).into_iter().enumerate() {
            c.set(i, j, x);
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let s = 0.5 * (c.get(i, j) + c.get(j, i));
            c.set(i, j, s);
            c.set(j, i, s);
        }
    }
    let scale = c.trace().abs().max(f64::MIN_POSITIVE);

    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues = Vec::new();
    for _ in 0..out_dim {
        let mut y: Vec<f64> = (0..dim).map(|d| 1.0 + 0.5 * libm::sin(1.0 + d as f64)).collect();
        orthonormalize(&mut y, &found);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITER {
            let mut next = c.mul_vec(&y);
            orthonormalize_against(&mut next, &found);
            let len = norm(&next);
            if len <= 1e-14 * scale {
                // Remaining spectrum is numerically zero; keep y.
                lambda = 0.0;
                break;
            }
            next.iter_mut().for_each(|x| *x /= len);
            lambda = len;
            let change: f64 = next.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            y = next;
            if libm::sqrt(change) < POWER_TOL {
                break;
            }
        }
        c.add_outer(&y, -lambda);
        eigenvalues.push(lambda);
        found.push(y);
    }

    let directions = found
        .iter()
        .map(|y| {
            let mut v = chol.solve_upper(y);
            let len = norm(&v);
            v.iter_mut().for_each(|x| *x /= len);
            let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-9 * big) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            v
        })
        .collect();
    Ok(LdaModel { directions, eigenvalues })
}

fn orthonormalize_against(y: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let p = dot(y, b);
        y.iter_mut().zip(b).for_each(|(x, bx)| *x -= p * bx);
    }
}

fn orthonormalize(y: &mut [f64], basis: &[Vec<f64>]) {
    orthonormalize_against(y, basis);
    let mut len = norm(y);
    if len < 1e-8 {
        // Start vector fell into the span of earlier directions.
        for (d, x) in y.iter_mut().enumerate() {
            *x = if d % 2 == 0 { 1.0 } else { -0.5 };
        }
        orthonormalize_against(y, basis);
        len = norm(y);
    }
    y.iter_mut().for_each(|x| *x /= len);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub instance_id: String,
    pub sense_id: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutput {
    pub points: Vec<ProjectedPoint>,
    pub model: LdaModel,
}

/// Projects every member of `groups` onto the LDA directions fitted on them,
/// each group masked with its own sense mask when `masks` is given.
pub fn lda_project(
    groups: &[SenseGroup<'_>],
    masks: Option<&MaskStore>,
    out_dim: usize,
    ridge: f64,
) -> Result<ProjectionOutput> {
    let mut classes = Vec::with_capacity(groups.len());
    for g in groups {
        let v = masked_vectors(g, masks)?.ok_or_else(|| Error::UnknownSense(g.sense_id.to_owned()))?;
        classes.push(v);
    }
    let model = fit_lda(&classes, out_dim, ridge)?;
    let mut points = Vec::new();
    for (g, vs) in groups.iter().zip(&classes) {
        for (r, v) in g.members.iter().zip(vs) {
            points.push(ProjectedPoint {
                instance_id: r.instance_id.clone(),
                sense_id: g.sense_id.to_owned(),
                coords: model.project(v),
            });
        }
    }
    Ok(ProjectionOutput { points, model })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscardedPair {
    pub a: String,
    pub a_sense: String,
    pub b: String,
    pub b_sense: String,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscardedProbe {
    /// Most similar pairs first.
    pub pairs: Vec<DiscardedPair>,
    pub mean_within: f64,
    pub mean_across: f64,
    /// Records whose discarded-only vector is all zeros.
    pub skipped: Vec<String>,
}

#[derive(PartialEq)]
struct Candidate {
    cosine: f64,
    i: usize,
    j: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Greater = ranks earlier: higher cosine, then lower indices.
    fn cmp(&self, other: &Self) -> Ordering {
        self.cosine.total_cmp(&other.cosine).then_with(|| (other.i, other.j).cmp(&(self.i, self.j)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Keeps only the dimensions each sense mask discards and ranks all record
/// pairs by cosine, returning the `top_k` most similar.
pub fn inspect_discarded(groups: &[SenseGroup<'_>], masks: &MaskStore, top_k: usize) -> Result<DiscardedProbe> {
    let mut items: Vec<(&str, &str, Vec<f64>)> = Vec::new();
    let mut skipped = Vec::new();
    for g in groups {
        let mask = masks.get(g.sense_id).ok_or_else(|| Error::UnknownSense(g.sense_id.to_owned()))?.complement();
        for r in &g.members {
            let v = mask.apply(&r.vector_f64())?;
            if norm_sq(&v) == 0.0 {
                skipped.push(r.instance_id.clone());
            } else {
                items.push((r.instance_id.as_str(), g.sense_id, v));
            }
        }
    }
    let n_pairs = items.len() * items.len().saturating_sub(1) / 2;
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(top_k.min(n_pairs) + 1);
    let (mut within, mut n_within, mut across, mut n_across) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let c = cosine(&items[i].2, &items[j].2).unwrap_or(0.0);
            if items[i].1 == items[j].1 {
                within += c;
                n_within += 1;
            } else {
                across += c;
                n_across += 1;
            }
            if top_k == 0 {
                continue;
            }
            let cand = Candidate { cosine: c, i, j };
            if heap.len() < top_k {
                heap.push(Reverse(cand));
            } else if heap.peek().is_some_and(|Reverse(worst)| cand > *worst) {
                heap.pop();
                heap.push(Reverse(cand));
            }
        }
    }
    let mut ranked: Vec<Candidate> = heap.into_iter().map(|Reverse(c)| c).collect();
    ranked.sort_by(|a, b| b.cmp(a));
    let pairs = ranked
        .into_iter()
        .map(|c| DiscardedPair {
            a: items[c.i].0.to_owned(),
            a_sense: items[c.i].1.to_owned(),
            b: items[c.j].0.to_owned(),
            b_sense: items[c.j].1.to_owned(),
            cosine: c.cosine,
        })
        .collect();
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Ok(DiscardedProbe { pairs, mean_within: mean(within, n_within), mean_across: mean(across, n_across), skipped })
}
