//! Incremental sense weight training.
//!
//! For one sense group the trainer keeps an importance weight per dimension.
//! Each epoch it zeroes `N` dimensions in copies of the group's vectors,
//! measures the pairwise cosine objective again and feeds the change back to
//! the zeroed dimensions:
//!
//! ```text
//! grad_d = (S_pre - S_cur) * (1 - mask_d) - λ sign(w_d)
//! gti_d += grad_d²
//! w_d   += γ grad_d / (ε + sqrt(gti_d))
//! ```
//!
//! Masks are drawn uniformly during the first `explore_epochs` epochs. After
//! that, with probability `alpha` they are still uniform, otherwise low-weight
//! dimensions are preferred.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::SenseGroup;
use crate::linalg::norm_sq;
use crate::masker::fraction_count;
use crate::{Error, Result};

/// Offset added to every exploitation sampling weight so that no dimension
/// has zero probability.
pub const POLICY_DELTA: f64 = 1e-6;

/// How pairwise cosines are aggregated into the group objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Sum,
    Mean,
}

/// Sign of the similarity-drop term in the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `(S_pre - S_cur) * (1 - mask)`: zeroing a dimension that the group
    /// relies on raises its weight.
    Corrected,
    /// `(S_pre - S_cur) * (mask - 1)`, exactly as typeset.
    Literal,
}

/// Form of the AdaGrad weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdagradForm {
    /// `w + γ grad / (ε + sqrt(gti))`
    Standard,
    /// `(w + γ grad) / (ε + sqrt(gti))`
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma0: f64,
    pub epochs: usize,
    pub explore_epochs: usize,
    pub alpha: f64,
    pub mask_fraction: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub objective: Objective,
    pub sign_convention: SignConvention,
    pub adagrad_form: AdagradForm,
    pub init_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma0: 0.05,
            epochs: 500,
            explore_epochs: 100,
            alpha: 0.1,
            mask_fraction: 0.05,
            lambda: 1e-4,
            epsilon: 1e-8,
            seed: 0,
            objective: Objective::Mean,
            sign_convention: SignConvention::Corrected,
            adagrad_form: AdagradForm::Standard,
            init_weight: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.explore_epochs > self.epochs {
            return bad("explore_epochs must not exceed epochs");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.mask_fraction > 0.0 && self.mask_fraction <= 1.0) {
            return bad("mask_fraction must lie in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !self.init_weight.is_finite() {
            return bad("init_weight must be finite");
        }
        Ok(())
    }

    /// Number of dimensions zeroed per epoch: `max(1, floor(mask_fraction·D))`.
    pub fn mask_size(&self, dim: usize) -> usize {
        fraction_count(self.mask_fraction, dim).max(1).min(dim)
    }
}

/// Per-epoch mask with exactly `N` zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepMask {
    keep: Vec<bool>,
    zero_positions: Vec<usize>,
}

impl StepMask {
    /// Builds a mask over `dim` dimensions zeroing `positions`.
    pub fn from_zero_positions(dim: usize, mut positions: Vec<usize>) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        if let Some(&last) = positions.last() {
            if last >= dim {
                return Err(Error::LengthMismatch { left: last + 1, right: dim });
            }
        }
        let mut keep = vec![true; dim];
        for &p in &positions {
            keep[p] = false;
        }
        Ok(StepMask { keep, zero_positions: positions })
    }

    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    /// `true` where the dimension is kept (mask bit 1).
    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// Sorted, distinct zeroed dimensions.
    pub fn zero_positions(&self) -> &[usize] {
        &self.zero_positions
    }

    pub fn apply_into(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(v.iter().zip(&self.keep).map(|(&x, &k)| if k { x } else { 0.0 }));
    }
}

/// Value of the pairwise cosine objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub value: f64,
    /// Pairs involving an all-zero vector; they contribute 0.
    pub zero_pairs: usize,
}

/// Sum or mean of `cos(v_i, v_j)` over unordered pairs `i < j`.
///
/// Uses `Σ_{i<j} u_i·u_j = (|Σ u_i|² - Σ |u_i|²) / 2` over the unit vectors
/// `u_i`, which costs one pass over the group.
pub fn pairwise_similarity<V: AsRef<[f64]>>(vectors: &[V], objective: Objective) -> Result<Similarity> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::DegenerateGroup(n));
    }
    let dim = vectors[0].as_ref().len();
    let mut total = vec![0.0; dim];
    let mut self_terms = 0.0;
    let mut zeros = 0usize;
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::LengthMismatch { left: v.len(), right: dim });
        }
        let ns = norm_sq(v);
        if ns == 0.0 {
            zeros += 1;
            continue;
        }
        let inv = 1.0 / libm::sqrt(ns);
        let mut unit_sq = 0.0;
        for (t, &x) in total.iter_mut().zip(v) {
            let u = x * inv;
            *t += u;
            unit_sq += u * u;
        }
        self_terms += unit_sq;
    }
    let sum = 0.5 * (norm_sq(&total) - self_terms);
    let zero_pairs = zeros * (n - zeros) + zeros * zeros.saturating_sub(1) / 2;
    let value = match objective {
        Objective::Sum => sum,
        Objective::Mean => sum / (n * (n - 1) / 2) as f64,
    };
    Ok(Similarity { value, zero_pairs })
}

/// Draws `n` distinct dimensions uniformly without replacement.
pub fn generate_mask_uniform<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Result<StepMask> {
    if n > dim {
        return Err(Error::MaskTooLarge { n, dim });
    }
    let positions = rand::seq::index::sample(rng, dim, n).into_vec();
    StepMask::from_zero_positions(dim, positions)
}

/// Exploration/exploitation mask draw.
///
/// With probability `alpha` this is [`generate_mask_uniform`]. Otherwise `n`
/// distinct dimensions are drawn sequentially without replacement with
/// probability proportional to `w_max - w_d + δ`, so high-weight dimensions
/// are zeroed least often.
pub fn generate_mask_policy<R: Rng + ?Sized>(w: &[f64], n: usize, alpha: f64, rng: &mut R) -> Result<StepMask> {
    let dim = w.len();
    if n > dim {
        return Err(Error::MaskTooLarge { n, dim });
    }
    if rng.random::<f64>() < alpha {
        return generate_mask_uniform(dim, n, rng);
    }
    let w_max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = w.iter().map(|&x| w_max - x + POLICY_DELTA).collect();
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (d, &p) in weights.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            pick = Some(d);
            if target < p {
                break;
            }
            target -= p;
        }
        // `pick` falls back to the last available dimension on rounding.
        let d = pick.expect("fewer available dimensions than draws");
        weights[d] = 0.0;
        positions.push(d);
    }
    StepMask::from_zero_positions(dim, positions)
}

/// Trained importance weights of one sense group.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    pub sense_id: String,
    pub w: Vec<f64>,
    pub gti: Vec<f64>,
    pub epochs_run: usize,
    pub config: TrainConfig,
    pub s_pre: f64,
}

impl WeightState {
    pub fn new(sense_id: impl Into<String>, dim: usize, config: TrainConfig, s_pre: f64) -> Self {
        WeightState {
            sense_id: sense_id.into(),
            w: vec![config.init_weight; dim],
            gti: vec![0.0; dim],
            epochs_run: 0,
            config,
            s_pre,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// One l1-regularized AdaGrad step given the masked objective `s_cur`.
    ///
    /// The state is left untouched when the step fails.
    pub fn step(&mut self, mask: &StepMask, s_cur: f64) -> Result<()> {
        if mask.dim() != self.dim() {
            return Err(Error::LengthMismatch { left: mask.dim(), right: self.dim() });
        }
        let cfg = &self.config;
        let drop = self.s_pre - s_cur;
        let mut grads = Vec::with_capacity(self.dim());
        for (d, (&keep, &w)) in mask.keep().iter().zip(&self.w).enumerate() {
            let masked = match (keep, cfg.sign_convention) {
                (true, _) => 0.0,
                (false, SignConvention::Corrected) => drop,
                (false, SignConvention::Literal) => -drop,
            };
            let grad = masked - cfg.lambda * sign(w);
            if !grad.is_finite() {
                return Err(Error::NonFiniteGradient(d));
            }
            grads.push(grad);
        }
        let mut w_next = Vec::with_capacity(self.dim());
        let mut gti_next = Vec::with_capacity(self.dim());
        for (d, &grad) in grads.iter().enumerate() {
            let gti = self.gti[d] + grad * grad;
            let denom = cfg.epsilon + libm::sqrt(gti);
            let w = match cfg.adagrad_form {
                AdagradForm::Standard => self.w[d] + cfg.gamma0 * grad / denom,
                AdagradForm::Literal => (self.w[d] + cfg.gamma0 * grad) / denom,
            };
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight(d));
            }
            w_next.push(w);
            gti_next.push(gti);
        }
        self.w = w_next;
        self.gti = gti_next;
        self.epochs_run += 1;
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Epoch-by-epoch trainer for one group.
#[derive(Debug)]
pub struct Trainer {
    state: WeightState,
    vectors: Vec<Vec<f64>>,
    scratch: Vec<Vec<f64>>,
    mask_size: usize,
    rng: ChaCha8Rng,
    zero_pairs: usize,
}

impl Trainer {
    /// Prepares training on `vectors` (at least two, equal lengths). The RNG
    /// is seeded with [`group_seed`] so results do not depend on which other
    /// groups are trained alongside.
    pub fn new(sense_id: &str, vectors: Vec<Vec<f64>>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if vectors.len() < 2 {
            return Err(Error::DegenerateGroup(vectors.len()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidConfig("zero-dimensional vectors".to_string()));
        }
        let s_pre = pairwise_similarity(&vectors, config.objective)?.value;
        let rng = ChaCha8Rng::seed_from_u64(group_seed(config.seed, sense_id));
        let mask_size = config.mask_size(dim);
        let scratch = vec![Vec::with_capacity(dim); vectors.len()];
        Ok(Trainer {
            state: WeightState::new(sense_id, dim, config, s_pre),
            vectors,
            scratch,
            mask_size,
            rng,
            zero_pairs: 0,
        })
    }

    pub fn state(&self) -> &WeightState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.epochs_run >= self.state.config.epochs
    }

    /// Pairs that collapsed to a zero vector under some epoch's mask.
    pub fn zero_pairs(&self) -> usize {
        self.zero_pairs
    }

    /// Runs one epoch and returns the mask it used.
    pub fn epoch(&mut self) -> Result<StepMask> {
        let cfg = &self.state.config;
        let mask = if self.state.epochs_run < cfg.explore_epochs {
            generate_mask_uniform(self.state.dim(), self.mask_size, &mut self.rng)?
        } else {
            generate_mask_policy(&self.state.w, self.mask_size, cfg.alpha, &mut self.rng)?
        };
        for (v, out) in self.vectors.iter().zip(self.scratch.iter_mut()) {
            mask.apply_into(v, out);
        }
        let sim = pairwise_similarity(&self.scratch, cfg.objective)?;
        self.zero_pairs += sim.zero_pairs;
        self.state.step(&mask, sim.value)?;
        Ok(mask)
    }

    pub fn run(mut self) -> Result<WeightState> {
        while !self.is_done() {
            self.epoch()?;
        }
        Ok(self.state)
    }
}

/// Trains the weights of one sense group.
pub fn train_group(group: &SenseGroup<'_>, config: &TrainConfig) -> Result<WeightState> {
    if group.len() < 2 {
        return Err(Error::DegenerateGroup(group.len()));
    }
    Trainer::new(group.sense_id, group.vectors(), config.clone())?.run()
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 14695981039346656037;
    const PRIME: u64 = 1099511628211;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Per-group RNG seed: `seed XOR fnv1a64(sense_id)`.
pub fn group_seed(seed: u64, sense_id: &str) -> u64 {
    seed ^ fnv1a64(sense_id.as_bytes())
}

pub type WeightStore = BTreeMap<String, WeightState>;

/// A group that produced no weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub sense_id: String,
    pub error: Error,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub store: WeightStore,
    pub diagnostics: Vec<Diagnostic>,
}

impl TrainReport {
    /// Folds one group's result into the report.
    pub fn record(&mut self, sense_id: &str, result: Result<WeightState>) {
        match result {
            Ok(state) => {
                self.store.insert(sense_id.to_string(), state);
            }
            Err(error) => self.diagnostics.push(Diagnostic { sense_id: sense_id.to_string(), error }),
        }
    }
}

/// Trains every group sequentially. Groups that cannot be trained become
/// diagnostics; the batch never aborts.
pub fn train_all(groups: &[SenseGroup<'_>], config: &TrainConfig) -> TrainReport {
    let mut report = TrainReport::default();
    for g in groups {
        report.record(g.sense_id, train_group(g, config));
    }
    report
}
