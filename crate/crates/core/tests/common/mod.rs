//! Reference implementations written for clarity, not speed. They share no
//! code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `a·b / (|a| |b|)`, 0 when either side is zero.
pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cos(a, b)
}

pub fn masked(v: &[f64], keep: &[bool]) -> Vec<f64> {
    v.iter().zip(keep).map(|(x, k)| if *k { *x } else { 0.0 }).collect()
}

/// Sum or mean of the cosines of all unordered pairs.
pub fn pairwise(vs: &[Vec<f64>], mean: bool) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            total += cos(&vs[i], &vs[j]);
            pairs += 1.0;
        }
    }
    if mean {
        total / pairs
    } else {
        total
    }
}

/// Word-based KNN: scan every occurrence, keep the `min(n, 5)` nearest
/// (earlier occurrence first on equal distance), majority vote, ties to the
/// label seen first among the nearest.
pub fn word_knn(query: &[f64], occs: &[(Vec<f64>, String)]) -> String {
    let k = occs.len().min(5);
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..occs.len() {
            if chosen.contains(&i) {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if dist(query, &occs[i].0) < dist(query, &occs[b].0) => best = Some(i),
                _ => {}
            }
        }
        chosen.push(best.unwrap());
    }
    let votes = |label: &str| chosen.iter().filter(|&&i| occs[i].1 == label).count();
    let top = chosen.iter().map(|&i| votes(&occs[i].1)).max().unwrap();
    let winner = chosen.iter().find(|&&i| votes(&occs[i].1) == top).unwrap();
    occs[*winner].1.clone()
}

/// Sense-based KNN: nearest per-sense mean, lower sense id on ties.
pub fn sense_knn(query: &[f64], occs: &[(Vec<f64>, String)]) -> String {
    let mut sums: BTreeMap<&str, (Vec<f64>, f64)> = BTreeMap::new();
    for (v, s) in occs {
        let e = sums.entry(s.as_str()).or_insert_with(|| (vec![0.0; v.len()], 0.0));
        for (a, b) in e.0.iter_mut().zip(v) {
            *a += b;
        }
        e.1 += 1.0;
    }
    let mut best: Option<(&str, f64)> = None;
    for (s, (sum, n)) in &sums {
        let c: Vec<f64> = sum.iter().map(|x| x / n).collect();
        let d = dist(query, &c);
        if best.is_none() || d < best.unwrap().1 {
            best = Some((s, d));
        }
    }
    best.unwrap().0.to_string()
}

/// Mask selection: for each candidate (in the given order) mask query and
/// neighbors alike, sum the k smallest distances; first minimum wins.
pub fn mask_selection(
    query: &[f64],
    occs: &[Vec<f64>],
    candidates: &[(String, Vec<bool>)],
    k: usize,
) -> (String, Vec<f64>) {
    let k = k.min(occs.len());
    let mut ds = Vec::new();
    for (_, keep) in candidates {
        let q = masked(query, keep);
        if q.iter().all(|x| *x == 0.0) {
            ds.push(f64::INFINITY);
            continue;
        }
        let mut all: Vec<f64> = occs.iter().map(|o| dist(&q, &masked(o, keep))).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.push(all[..k].iter().sum());
    }
    let mut best = 0;
    for i in 1..ds.len() {
        if ds[i] < ds[best] {
            best = i;
        }
    }
    (candidates[best].0.clone(), ds)
}

/// Rank of each value, 1-based; equal values share the mean of their ranks.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let below = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&ranks(xs), &ranks(ys))
}

/// Classical tie-free formula `1 - 6 Σd² / (n(n²-1))`.
pub fn spearman_distinct(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Every permutation of `items`, by Heap's algorithm.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    fn heap<T: Clone>(k: usize, a: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut out = Vec::new();
    heap(items.len(), &mut items.to_vec(), &mut out);
    out
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            // Box-Muller keeps the oracle free of the library's sampler.
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

/// Between-class over within-class scatter of 1-D values.
pub fn fisher_ratio(classes: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = classes.iter().flatten().copied().collect();
    let m = all.iter().sum::<f64>() / all.len() as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for c in classes {
        let mc = c.iter().sum::<f64>() / c.len() as f64;
        between += c.len() as f64 * (mc - m).powi(2);
        within += c.iter().map(|x| (x - mc).powi(2)).sum::<f64>();
    }
    between / within
}
