//! Small dense vector and matrix helpers.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// Cosine similarity, or `None` when either vector is all zeros.
///
/// Computed as `a·b / sqrt(|a|²·|b|²)` so that a vector compared with itself
/// yields exactly 1.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let c = dot(a, b) / libm::sqrt(na * nb);
    Some(c.clamp(-1.0, 1.0))
}

/// Cosine distance `1 - cos`, with the zero-vector convention `cos = 0`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine(a, b).unwrap_or(0.0)
}

/// Mean cosine over unordered pairs, evaluated pair by pair.
///
/// Returns the mean and the number of pairs that involved a zero vector
/// (those count as cosine 0). Fewer than two vectors is a degenerate group.
pub fn mean_pairwise_cosine<V: AsRef<[f64]>>(vectors: &[V]) -> Result<(f64, usize)> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::DegenerateGroup(n));
    }
    let norms: Vec<f64> = vectors.iter().map(|v| norm_sq(v.as_ref())).collect();
    let mut sum = 0.0;
    let mut zero_pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                zero_pairs += 1;
                continue;
            }
            let c = dot(vectors[i].as_ref(), vectors[j].as_ref()) / libm::sqrt(norms[i] * norms[j]);
            sum += c.clamp(-1.0, 1.0);
        }
    }
    let pairs = n * (n - 1) / 2;
    Ok((sum / pairs as f64, zero_pairs))
}

/// Componentwise mean. Panics on an empty slice.
pub fn mean_vector<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<f64> {
    assert!(!vectors.is_empty(), "mean of no vectors");
    let dim = vectors[0].as_ref().len();
    let mut acc = vec![0.0; dim];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v.as_ref()) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += value;
        }
    }

    /// `self += scale * x xᵀ`
    pub fn add_outer(&mut self, x: &[f64], scale: f64) {
        for i in 0..self.n {
            let xi = scale * x[i];
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, xj) in row.iter_mut().zip(x) {
                *r += xi * xj;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Singular);
            }
            let d = libm::sqrt(d);
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }
}

/// `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = y[i] - dot(row, &y[..i]);
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, xk) in x.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * xk;
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_cosine_is_exactly_one() {
        let v = [0.1, -3.7, 2.25, 1e-3];
        assert_eq!(cosine(&v, &v), Some(1.0));
        assert_eq!(cosine(&v, &[0.0; 4]), None);
        assert_eq!(cosine_distance(&v, &[0.0; 4]), 1.0);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = SquareMatrix::zeros(3);
        a.add_outer(&[1.0, 2.0, 0.5], 1.0);
        a.add_outer(&[0.0, 1.0, -1.0], 2.0);
        a.add_diagonal(0.5);
        let ch = a.cholesky().unwrap();
        let b = [1.0, -2.0, 3.0];
        let x = ch.solve_upper(&ch.solve_lower(&b));
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let mut a = SquareMatrix::zeros(2);
        a.add_outer(&[1.0, 1.0], 1.0);
        assert_eq!(a.cholesky().unwrap_err(), Error::Singular);
    }
}
