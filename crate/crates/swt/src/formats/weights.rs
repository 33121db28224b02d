//! `weights.jsonl` and `masks.jsonl`, one sense per line in sense order.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use swt_core::masker::{MaskRule, MaskStore, ThresholdMask};
use swt_core::swt::{AdagradForm, Objective, SignConvention, TrainConfig, WeightState, WeightStore};

use crate::{Error, Result};

/// Training settings as written next to each weight vector. Field names
/// follow the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub lr: f64,
    pub epochs: usize,
    pub explore_epochs: usize,
    pub alpha: f64,
    pub mask_fraction: f64,
    pub l1: f64,
    pub eps: f64,
    pub seed: u64,
    pub objective: String,
    pub sign: String,
    pub update: String,
    pub init_weight: f64,
}

pub fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::Sum => "sum",
        Objective::Mean => "mean",
    }
}

pub fn sign_name(s: SignConvention) -> &'static str {
    match s {
        SignConvention::Corrected => "corrected",
        SignConvention::Literal => "literal",
    }
}

pub fn update_name(u: AdagradForm) -> &'static str {
    match u {
        AdagradForm::Standard => "standard",
        AdagradForm::Literal => "literal",
    }
}

pub fn parse_objective(s: &str) -> Option<Objective> {
    match s {
        "sum" => Some(Objective::Sum),
        "mean" => Some(Objective::Mean),
        _ => None,
    }
}

pub fn parse_sign(s: &str) -> Option<SignConvention> {
    match s {
        "corrected" => Some(SignConvention::Corrected),
        "literal" => Some(SignConvention::Literal),
        _ => None,
    }
}

pub fn parse_update(s: &str) -> Option<AdagradForm> {
    match s {
        "standard" => Some(AdagradForm::Standard),
        "literal" => Some(AdagradForm::Literal),
        _ => None,
    }
}

impl From<&TrainConfig> for ConfigRecord {
    fn from(c: &TrainConfig) -> Self {
        ConfigRecord {
            lr: c.gamma0,
            epochs: c.epochs,
            explore_epochs: c.explore_epochs,
            alpha: c.alpha,
            mask_fraction: c.mask_fraction,
            l1: c.lambda,
            eps: c.epsilon,
            seed: c.seed,
            objective: objective_name(c.objective).into(),
            sign: sign_name(c.sign_convention).into(),
            update: update_name(c.adagrad_form).into(),
            init_weight: c.init_weight,
        }
    }
}

impl TryFrom<&ConfigRecord> for TrainConfig {
    type Error = String;

    fn try_from(r: &ConfigRecord) -> std::result::Result<Self, String> {
        Ok(TrainConfig {
            gamma0: r.lr,
            epochs: r.epochs,
            explore_epochs: r.explore_epochs,
            alpha: r.alpha,
            mask_fraction: r.mask_fraction,
            lambda: r.l1,
            epsilon: r.eps,
            seed: r.seed,
            objective: parse_objective(&r.objective).ok_or_else(|| format!("unknown objective `{}`", r.objective))?,
            sign_convention: parse_sign(&r.sign).ok_or_else(|| format!("unknown sign `{}`", r.sign))?,
            adagrad_form: parse_update(&r.update).ok_or_else(|| format!("unknown update `{}`", r.update))?,
            init_weight: r.init_weight,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct WeightLine {
    sense: String,
    dim: usize,
    w: Vec<f64>,
    gti: Vec<f64>,
    epochs: usize,
    config: ConfigRecord,
    #[serde(default)]
    s_pre: f64,
}

pub fn write_weights<W: Write>(store: &WeightStore, mut out: W) -> io::Result<()> {
    for state in store.values() {
        let line = WeightLine {
            sense: state.sense_id.clone(),
            dim: state.dim(),
            w: state.w.clone(),
            gti: state.gti.clone(),
            epochs: state.epochs_run,
            config: (&state.config).into(),
            s_pre: state.s_pre,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_weights<R: BufRead>(reader: R, label: &Path) -> Result<WeightStore> {
    let mut store = WeightStore::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: WeightLine = serde_json::from_str(&line).map_err(|e| Error::parse(label, n, e))?;
        if rec.w.len() != rec.dim || rec.gti.len() != rec.dim {
            return Err(Error::parse(label, n, format!("`{}`: vector length differs from dim {}", rec.sense, rec.dim)));
        }
        if let Some(d) = store.values().next().map(WeightState::dim) {
            if d != rec.dim {
                return Err(Error::parse(label, n, format!("`{}`: dim {} differs from {d}", rec.sense, rec.dim)));
            }
        }
        let config = TrainConfig::try_from(&rec.config).map_err(|e| Error::parse(label, n, e))?;
        let state = WeightState {
            sense_id: rec.sense.clone(),
            w: rec.w,
            gti: rec.gti,
            epochs_run: rec.epochs,
            config,
            s_pre: rec.s_pre,
        };
        if store.insert(rec.sense.clone(), state).is_some() {
            return Err(Error::parse(label, n, format!("duplicate sense `{}`", rec.sense)));
        }
    }
    Ok(store)
}

/// Parses `p=<fraction>` or `tau=<threshold>`.
pub fn parse_rule(s: &str) -> Option<MaskRule> {
    let (kind, value) = s.split_once('=')?;
    let value: f64 = value.parse().ok()?;
    match kind {
        "p" if (0.0..=1.0).contains(&value) => Some(MaskRule::Percentile(value)),
        "tau" if !value.is_nan() => Some(MaskRule::Absolute(value)),
        _ => None,
    }
}

#[derive(Serialize, Deserialize)]
struct MaskLine {
    sense: String,
    rule: String,
    bits_zero: Vec<usize>,
    dim: usize,
}

pub fn write_masks<W: Write>(masks: &MaskStore, mut out: W) -> io::Result<()> {
    for m in masks.values() {
        let line = MaskLine {
            sense: m.sense_id.clone(),
            rule: m.rule.to_string(),
            bits_zero: m.zero_positions(),
            dim: m.dim(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads masks. `dim` may be absent from a line, in which case
/// `fallback_dim` must supply it.
pub fn read_masks<R: BufRead>(reader: R, label: &Path, fallback_dim: Option<usize>) -> Result<MaskStore> {
    #[derive(Deserialize)]
    struct Loose {
        sense: String,
        rule: String,
        bits_zero: Vec<usize>,
        dim: Option<usize>,
    }
    let mut store = MaskStore::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Loose = serde_json::from_str(&line).map_err(|e| Error::parse(label, n, e))?;
        let rule = parse_rule(&rec.rule).ok_or_else(|| Error::parse(label, n, format!("bad rule `{}`", rec.rule)))?;
        let dim = rec.dim.or(fallback_dim).ok_or_else(|| Error::parse(label, n, "mask dimension unknown"))?;
        let mask = ThresholdMask::from_zero_positions(rec.sense.clone(), dim, &rec.bits_zero, rule)
            .map_err(|e| Error::parse(label, n, e))?;
        if store.insert(rec.sense.clone(), mask).is_some() {
            return Err(Error::parse(label, n, format!("duplicate sense `{}`", rec.sense)));
        }
    }
    Ok(store)
}
