//! The `swt` command line.
//!
//! Exit status: 0 on success, 1 on runtime or data errors, 2 on usage
//! errors. Outputs are staged and only renamed into place once a command has
//! fully succeeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use swt_core::analysis::{
    correlation_report_with_masks, inspect_discarded, lda_project, within_group_cosine, DEFAULT_MIN_SIZE, DEFAULT_RIDGE,
};
use swt_core::corpus::{group_by_sense, EmbeddingSet, SenseGroup, SenseInventory};
use swt_core::knn::{
    build_sense_index, build_word_index, evaluate_f1, predict_mfs, predict_sense_knn, predict_word_knn, GoldKey,
    Prediction, Query,
};
use swt_core::masker::{masks_from_weights, predict_masked_word_knn, selection_prediction, MaskRule, MaskStore};
use swt_core::swt::TrainConfig;
use swt_core::synth::{generate_synthetic, SynthConfig};

use crate::config::ConfigFile;
use crate::formats::embeddings::{write_jsonl, write_packed};
use crate::formats::tables::{
    read_gold, read_inventory, read_taxonomy, report_rows, write_gold, write_inventory, write_predictions,
    write_report, write_taxonomy,
};
use crate::formats::truth::write_truth;
use crate::formats::weights::{
    parse_objective, parse_sign, parse_update, read_masks, read_weights, write_masks, write_weights,
};
use crate::formats::{load_embeddings, open};
use crate::output::{check_input, check_output, Staged};
use crate::parallel::train_all_parallel;
use crate::Error;

#[derive(Parser, Debug)]
#[command(name = "swt", version, about = "Sense weight training for contextual word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus with planted signal dimensions.
    Synth(SynthArgs),
    /// Learn per-dimension weights for every sense group.
    Train(TrainArgs),
    /// Turn weights into threshold masks.
    Mask(MaskArgs),
    /// KNN / MFS word sense disambiguation.
    Wsd(WsdArgs),
    /// Word-KNN with per-token mask selection, next to the unmasked run.
    WsdMasked(WsdMaskedArgs),
    /// Within-group cosine and taxonomy correlation report.
    Analyze(AnalyzeArgs),
    /// Two-dimensional LDA projection.
    Project(ProjectArgs),
    /// Most similar record pairs on the discarded dimensions only.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FileFormat {
    Jsonl,
    Packed,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    groups: usize,
    #[arg(long, default_value_t = 100)]
    group_size: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 32)]
    signal_dims: usize,
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 0.0)]
    test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FileFormat::Jsonl)]
    format: FileFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignArg {
    Corrected,
    Literal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UpdateArg {
    Standard,
    Literal,
}

const TRAIN_KEYS: &[&str] = &[
    "lr",
    "epochs",
    "explore-epochs",
    "alpha",
    "mask-fraction",
    "l1",
    "eps",
    "seed",
    "objective",
    "sign",
    "update",
    "init-weight",
    "threads",
    "layer",
];

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// key=value file with defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    layer: Option<i32>,
    /// Base learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Epochs of uniform masks before the weight-guided policy starts.
    #[arg(long)]
    explore_epochs: Option<usize>,
    /// Probability of a uniform mask after the exploration phase.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fraction of dimensions zeroed per epoch.
    #[arg(long)]
    mask_fraction: Option<f64>,
    /// l1 penalty.
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    #[arg(long, value_enum)]
    update: Option<UpdateArg>,
    #[arg(long)]
    init_weight: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct MaskArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Zero this fraction of lowest-weight dimensions (default 0.05).
    #[arg(long, conflicts_with = "tau")]
    percent: Option<f64>,
    /// Zero every dimension whose weight is below this value.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Word-based KNN with first-sense fallback.
    Wf,
    /// Word-based KNN.
    W,
    /// Sense-based KNN with first-sense fallback.
    Sf,
    /// Sense-based KNN.
    S,
    /// Most frequent training sense.
    Mfs,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Wf => "wf",
            Method::W => "w",
            Method::Sf => "sf",
            Method::S => "s",
            Method::Mfs => "mfs",
        }
    }
}

#[derive(Args, Debug)]
struct WsdInputs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Sense inventory; required for first-sense fallback.
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long)]
    layer: Option<i32>,
    /// Score table; printed to standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WsdArgs {
    #[command(flatten)]
    io: WsdInputs,
    #[arg(long, value_enum, default_value_t = Method::Wf)]
    method: Method,
}

#[derive(Args, Debug)]
struct MaskSource {
    /// Trained weights; masks are derived with --percent or --tau.
    #[arg(long, conflicts_with = "masks")]
    weights: Option<PathBuf>,
    /// Precomputed masks.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["tau", "masks"])]
    percent: Option<f64>,
    #[arg(long, conflicts_with = "masks")]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct WsdMaskedArgs {
    #[command(flatten)]
    io: WsdInputs,
    #[command(flatten)]
    source: MaskSource,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    source: MaskSource,
    #[arg(long)]
    taxonomy: PathBuf,
    /// Groups must have more members than this to enter the correlation.
    #[arg(long, default_value_t = DEFAULT_MIN_SIZE)]
    min_size: usize,
    #[arg(long)]
    layer: Option<i32>,
    /// Report table; printed to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-group within-group cosines.
    #[arg(long)]
    groups_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    source: MaskSource,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
    #[arg(long)]
    layer: Option<i32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    source: MaskSource,
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    #[arg(long)]
    layer: Option<i32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<swt_core::Error> for Failure {
    fn from(e: swt_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Mask(a) => mask(a),
        Command::Wsd(a) => wsd(a),
        Command::WsdMasked(a) => wsd_masked(a),
        Command::Analyze(a) => analyze(a),
        Command::Project(a) => project(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("swt: usage error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("swt: error: {e}");
            1
        }
    }
}

fn inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Outcome {
    paths.into_iter().try_for_each(check_input).map_err(Failure::from)
}

fn outputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Outcome {
    paths.into_iter().try_for_each(check_output).map_err(Failure::from)
}

fn load_set(path: &Path, layer: Option<i32>) -> Result<EmbeddingSet, Failure> {
    let set = load_embeddings(path, None)?;
    match layer {
        None => Ok(set),
        Some(l) => set
            .filter_layer(l)
            .ok_or_else(|| Error::Invalid(format!("{}: no records at layer {l}", path.display())).into()),
    }
}

fn check_fraction(flag: &str, p: f64) -> Outcome {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(usage(format!("{flag} takes a fraction in [0, 1], got {p}")))
    }
}

fn synth(a: SynthArgs) -> Outcome {
    let config = SynthConfig {
        n_groups: a.groups,
        group_size: a.group_size,
        dim: a.dim,
        signal_dims: a.signal_dims,
        signal_strength: a.strength,
        noise_sigma: a.sigma,
        taxonomy_depth: a.depth,
        test_fraction: a.test_fraction,
        seed: a.seed,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    if a.out_dir.exists() && !a.out_dir.is_dir() {
        return Err(Error::Invalid(format!("{}: not a directory", a.out_dir.display())).into());
    }
    let corpus = generate_synthetic(&config)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let ext = match a.format {
        FileFormat::Jsonl => "jsonl",
        FileFormat::Packed => "swte",
    };
    let write_set = |staged: &mut Staged, name: &str, set: &EmbeddingSet| {
        let path = a.out_dir.join(format!("{name}.{ext}"));
        match a.format {
            FileFormat::Jsonl => staged.write(&path, |w| write_jsonl(set, w)),
            FileFormat::Packed => staged.write(&path, |w| write_packed(set, w)),
        }
    };
    let mut staged = Staged::new();
    write_set(&mut staged, "train", &corpus.train)?;
    if let Some(test) = &corpus.test {
        write_set(&mut staged, "test", test)?;
        staged.write(&a.out_dir.join("gold.key"), |w| write_gold(&corpus.gold, w))?;
    }
    staged.write(&a.out_dir.join("inventory.tsv"), |w| write_inventory(&corpus.inventory, w))?;
    staged.write(&a.out_dir.join("taxonomy.tsv"), |w| write_taxonomy(&corpus.truth.taxonomy, w))?;
    staged.write(&a.out_dir.join("truth.json"), |w| write_truth(&corpus.truth.signal_dims, w))?;
    staged.commit()?;
    eprintln!(
        "swt: wrote {} training and {} held-out records to {}",
        corpus.train.len(),
        corpus.test.as_ref().map_or(0, EmbeddingSet::len),
        a.out_dir.display()
    );
    Ok(())
}

fn merge_choice<T>(
    cfg: &ConfigFile,
    flag: Option<T>,
    key: &str,
    parse: impl Fn(&str) -> Option<T>,
    default: T,
) -> Result<T, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get::<String>(key).map_err(|e| usage(e.to_string()))? {
        None => Ok(default),
        Some(s) => parse(&s).ok_or_else(|| usage(format!("config `{key}`: unknown value `{s}`"))),
    }
}

fn train_config(a: &TrainArgs, cfg: &ConfigFile) -> Result<(TrainConfig, usize, Option<i32>), Failure> {
    let d = TrainConfig::default();
    let u = |e: Error| usage(e.to_string());
    let config = TrainConfig {
        gamma0: cfg.merge(a.lr, "lr", d.gamma0).map_err(u)?,
        epochs: cfg.merge(a.epochs, "epochs", d.epochs).map_err(u)?,
        explore_epochs: cfg.merge(a.explore_epochs, "explore-epochs", d.explore_epochs).map_err(u)?,
        alpha: cfg.merge(a.alpha, "alpha", d.alpha).map_err(u)?,
        mask_fraction: cfg.merge(a.mask_fraction, "mask-fraction", d.mask_fraction).map_err(u)?,
        lambda: cfg.merge(a.l1, "l1", d.lambda).map_err(u)?,
        epsilon: cfg.merge(a.eps, "eps", d.epsilon).map_err(u)?,
        seed: cfg.merge(a.seed, "seed", d.seed).map_err(u)?,
        objective: merge_choice(cfg, a.objective.map(|o| o.into()), "objective", parse_objective, d.objective)?,
        sign_convention: merge_choice(cfg, a.sign.map(|s| s.into()), "sign", parse_sign, d.sign_convention)?,
        adagrad_form: merge_choice(cfg, a.update.map(|s| s.into()), "update", parse_update, d.adagrad_form)?,
        init_weight: cfg.merge(a.init_weight, "init-weight", d.init_weight).map_err(u)?,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let threads = cfg.merge(a.threads, "threads", 0).map_err(u)?;
    let layer = match a.layer {
        Some(l) => Some(l),
        None => cfg.get("layer").map_err(u)?,
    };
    Ok((config, threads, layer))
}

impl From<ObjectiveArg> for swt_core::swt::Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Sum => Self::Sum,
            ObjectiveArg::Mean => Self::Mean,
        }
    }
}

impl From<SignArg> for swt_core::swt::SignConvention {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Corrected => Self::Corrected,
            SignArg::Literal => Self::Literal,
        }
    }
}

impl From<UpdateArg> for swt_core::swt::AdagradForm {
    fn from(u: UpdateArg) -> Self {
        match u {
            UpdateArg::Standard => Self::Standard,
            UpdateArg::Literal => Self::Literal,
        }
    }
}

fn train(a: TrainArgs) -> Outcome {
    inputs(a.config.as_deref())?;
    let cfg = match &a.config {
        Some(p) => {
            let c = ConfigFile::load(p).map_err(|e| match e {
                Error::Io { .. } => Failure::Run(e),
                other => usage(other.to_string()),
            })?;
            c.check_keys(TRAIN_KEYS).map_err(|e| usage(e.to_string()))?;
            c
        }
        None => ConfigFile::default(),
    };
    let (config, threads, layer) = train_config(&a, &cfg)?;
    inputs([a.embeddings.as_path()])?;
    outputs([a.out.as_path()])?;
    let set = load_set(&a.embeddings, layer)?;
    let groups = group_by_sense(&set);
    let report = train_all_parallel(&groups, &config, threads)?;
    for d in &report.diagnostics {
        eprintln!("swt: skipped sense {}: {}", d.sense_id, d.error);
    }
    if report.store.is_empty() {
        return Err(Error::Invalid(format!("{}: no sense group could be trained", a.embeddings.display())).into());
    }
    let mut staged = Staged::new();
    staged.write(&a.out, |w| write_weights(&report.store, w))?;
    staged.commit()?;
    eprintln!(
        "swt: trained {} sense groups ({} skipped), wrote {}",
        report.store.len(),
        report.diagnostics.len(),
        a.out.display()
    );
    Ok(())
}

fn mask(a: MaskArgs) -> Outcome {
    let rule = match (a.percent, a.tau) {
        (_, Some(t)) if t.is_nan() => return Err(usage("--tau must be a number")),
        (_, Some(t)) => MaskRule::Absolute(t),
        (p, None) => {
            let p = p.unwrap_or(0.05);
            check_fraction("--percent", p)?;
            MaskRule::Percentile(p)
        }
    };
    inputs([a.weights.as_path()])?;
    outputs([a.out.as_path()])?;
    let weights = read_weights(open(&a.weights)?, &a.weights)?;
    let masks = masks_from_weights(weights.iter().map(|(s, st)| (s.as_str(), st.w.as_slice())), rule)?;
    let mut staged = Staged::new();
    staged.write(&a.out, |w| write_masks(&masks, w))?;
    staged.commit()?;
    let mean = masks.values().map(|m| m.n_masked() as f64).sum::<f64>() / masks.len().max(1) as f64;
    eprintln!("swt: {} masks ({rule}), {mean:.2} dimensions zeroed on average", masks.len());
    Ok(())
}

impl MaskSource {
    fn input(&self) -> Option<&Path> {
        self.weights.as_deref().or(self.masks.as_deref())
    }

    fn rule(&self) -> Result<MaskRule, Failure> {
        match (self.percent, self.tau) {
            (_, Some(t)) if t.is_nan() => Err(usage("--tau must be a number")),
            (_, Some(t)) => Ok(MaskRule::Absolute(t)),
            (p, None) => {
                let p = p.unwrap_or(0.05);
                check_fraction("--percent", p)?;
                Ok(MaskRule::Percentile(p))
            }
        }
    }

    /// Checks flags before any file is touched.
    fn validate(&self, required: bool) -> Outcome {
        if required && self.input().is_none() {
            return Err(usage("one of --weights or --masks is required"));
        }
        self.rule().map(|_| ())
    }

    fn load(&self, dim: usize) -> Result<Option<MaskStore>, Failure> {
        let masks = if let Some(path) = &self.weights {
            let weights = read_weights(open(path)?, path)?;
            masks_from_weights(weights.iter().map(|(s, st)| (s.as_str(), st.w.as_slice())), self.rule()?)
                .map_err(|source| Error::Data { path: path.clone(), source })?
        } else if let Some(path) = &self.masks {
            read_masks(open(path)?, path, Some(dim))?
        } else {
            return Ok(None);
        };
        if let Some(m) = masks.values().find(|m| m.dim() != dim) {
            return Err(Error::Invalid(format!(
                "mask of `{}` has {} dimensions, embeddings have {dim}",
                m.sense_id,
                m.dim()
            ))
            .into());
        }
        Ok(Some(masks))
    }
}

struct WsdData {
    train: EmbeddingSet,
    test: EmbeddingSet,
    gold: GoldKey,
    inventory: Option<SenseInventory>,
}

impl WsdInputs {
    fn check_paths(&self, extra: Option<&Path>) -> Outcome {
        inputs(
            [self.train.as_path(), &self.test, &self.gold].into_iter().chain(self.inventory.as_deref()).chain(extra),
        )?;
        outputs(self.report.iter().chain(&self.predictions).map(PathBuf::as_path))
    }

    fn load(&self) -> Result<WsdData, Failure> {
        let train = load_set(&self.train, self.layer)?;
        let test = load_set(&self.test, self.layer)?;
        if train.dim() != test.dim() {
            return Err(Error::Invalid(format!(
                "training vectors have {} dimensions, test vectors {}",
                train.dim(),
                test.dim()
            ))
            .into());
        }
        let gold = read_gold(open(&self.gold)?, &self.gold)?;
        let inventory = match &self.inventory {
            Some(p) => Some(read_inventory(open(p)?, p)?),
            None => None,
        };
        Ok(WsdData { train, test, gold, inventory })
    }
}

struct QueryData {
    id: String,
    lemma: String,
    pos: String,
    vector: Vec<f64>,
}

impl QueryData {
    fn query(&self) -> Query<'_> {
        Query { instance_id: &self.id, lemma: &self.lemma, pos: &self.pos, vector: &self.vector }
    }
}

fn queries(set: &EmbeddingSet) -> Vec<QueryData> {
    set.records()
        .iter()
        .map(|r| QueryData {
            id: r.instance_id.clone(),
            lemma: r.lemma.clone(),
            pos: r.pos.clone(),
            vector: r.vector_f64(),
        })
        .collect()
}

fn emit_report(staged: &mut Staged, path: Option<&Path>, rows: &[String]) -> Outcome {
    match path {
        Some(p) => staged.write(p, |w| write_report(rows, w)).map_err(Failure::from),
        None => {
            let mut buf = Vec::new();
            write_report(rows, &mut buf).map_err(|e| Error::io("<stdout>", e))?;
            std::io::stdout().write_all(&buf).map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn wsd(a: WsdArgs) -> Outcome {
    a.io.check_paths(None)?;
    let data = a.io.load()?;
    let fallback = matches!(a.method, Method::Wf | Method::Sf | Method::Mfs);
    if fallback && data.inventory.is_none() {
        eprintln!("swt: no --inventory given, unseen lemmas stay unanswered");
    }
    let words = build_word_index(data.train.labeled());
    let senses = build_sense_index(&words);
    let inv = data.inventory.as_ref();
    let preds: Vec<Prediction> = queries(&data.test)
        .iter()
        .map(|q| match a.method {
            Method::Wf | Method::W => predict_word_knn(&q.query(), &words, inv, fallback, None),
            Method::Sf | Method::S => predict_sense_knn(&q.query(), &senses, inv, fallback),
            Method::Mfs => predict_mfs(&q.query(), &words, inv, fallback),
        })
        .collect();
    let report = evaluate_f1(&preds, &data.gold).map_err(|source| Error::Data { path: a.io.gold.clone(), source })?;
    let mut staged = Staged::new();
    if let Some(p) = &a.io.predictions {
        staged.write(p, |w| write_predictions(&preds, w))?;
    }
    emit_report(&mut staged, a.io.report.as_deref(), &report_rows(a.method.name(), &report))?;
    staged.commit()?;
    Ok(())
}

fn wsd_masked(a: WsdMaskedArgs) -> Outcome {
    a.source.validate(true)?;
    a.io.check_paths(a.source.input())?;
    let data = a.io.load()?;
    let masks = a.source.load(data.train.dim())?.expect("mask source validated");
    let inv = data.inventory.as_ref();
    let words = build_word_index(data.train.labeled());
    let qs = queries(&data.test);
    let mut plain = Vec::with_capacity(qs.len());
    let mut masked = Vec::with_capacity(qs.len());
    let mut selected = Vec::with_capacity(qs.len());
    let mut warnings = 0;
    let mut n_selected = 0;
    for q in &qs {
        let query = q.query();
        let base = predict_word_knn(&query, &words, inv, true, None);
        let (knn, selection) = predict_masked_word_knn(&query, &words, &masks, inv, true)?;
        match &selection {
            Some(sel) => {
                warnings += sel.warnings;
                n_selected += 1;
                selected.push(selection_prediction(&query, sel));
            }
            None => selected.push(base.clone()),
        }
        plain.push(base);
        masked.push(knn);
    }
    if warnings > 0 {
        eprintln!("swt: {warnings} zero vectors met during mask selection");
    }
    eprintln!("swt: masks selected for {n_selected} of {} tokens", qs.len());
    let eval = |preds: &[Prediction]| {
        evaluate_f1(preds, &data.gold).map_err(|source| Error::Data { path: a.io.gold.clone(), source })
    };
    let mut rows = report_rows("wf", &eval(&plain)?);
    rows.extend(report_rows("wf-masked", &eval(&masked)?));
    rows.extend(report_rows("wf-select", &eval(&selected)?));
    let mut staged = Staged::new();
    if let Some(p) = &a.io.predictions {
        staged.write(p, |w| write_predictions(&masked, w))?;
    }
    emit_report(&mut staged, a.io.report.as_deref(), &rows)?;
    staged.commit()?;
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Outcome {
    a.source.validate(true)?;
    inputs([a.embeddings.as_path(), &a.taxonomy].into_iter().chain(a.source.input()))?;
    outputs(a.out.iter().chain(&a.groups_out).map(PathBuf::as_path))?;
    let set = load_set(&a.embeddings, a.layer)?;
    let masks = a.source.load(set.dim())?.expect("mask source validated");
    let taxonomy = read_taxonomy(open(&a.taxonomy)?, &a.taxonomy)?;
    let groups = group_by_sense(&set);
    let original = within_group_cosine(&groups, None)?;
    let with_masks = within_group_cosine(&groups, Some(&masks))?;
    let mut report = correlation_report_with_masks(&groups, &masks, &taxonomy, a.min_size)
        .map_err(|source| Error::Data { path: a.embeddings.clone(), source })?;
    report.model_id = set.model_id().to_string();

    let masked_by_sense: std::collections::BTreeMap<&str, f64> =
        with_masks.per_group.iter().map(|(s, c)| (s.as_str(), *c)).collect();
    let mut group_lines = vec!["sense\tsize\tcos_original\tcos_masked".to_string()];
    let mut improved = 0;
    let mut compared = 0;
    for (g, (sense, cos)) in groups.iter().filter(|g| g.len() >= 2).zip(&original.per_group) {
        let Some(&m) = masked_by_sense.get(sense.as_str()) else { continue };
        compared += 1;
        if m >= *cos {
            improved += 1;
        }
        group_lines.push(format!("{sense}\t{}\t{cos}\t{m}", g.len()));
    }
    let layer = report.layer.map_or("NA".to_string(), |l| l.to_string());
    let header = "model\tlayer\tdim\tn_masked\trho_original\trho_masked\tcos_original\tcos_masked\tgroups\tpairs\tcross_pos_excluded\tgroups_improved";
    let line = format!(
        "{}\t{layer}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{improved}/{compared}",
        report.model_id,
        report.dim,
        report.n_masked,
        report.rho_original,
        report.rho_masked,
        report.cos_original,
        report.cos_masked,
        report.groups_used,
        report.pairs_used,
        report.cross_pos_excluded,
    );
    let mut staged = Staged::new();
    let table = format!("{header}\n{line}\n");
    match &a.out {
        Some(p) => staged.write(p, |w| w.write_all(table.as_bytes()))?,
        None => print!("{table}"),
    }
    if let Some(p) = &a.groups_out {
        staged.write(p, |w| {
            for l in &group_lines {
                writeln!(w, "{l}")?;
            }
            Ok(())
        })?;
    }
    staged.commit()?;
    if with_masks.zero_pairs > 0 {
        eprintln!("swt: {} pairs involved an all-zero masked vector", with_masks.zero_pairs);
    }
    Ok(())
}

fn trainable<'a>(groups: Vec<SenseGroup<'a>>) -> Vec<SenseGroup<'a>> {
    let (keep, drop): (Vec<_>, Vec<_>) = groups.into_iter().partition(|g| g.len() >= 2);
    for g in drop {
        eprintln!("swt: skipped sense {}: fewer than two members", g.sense_id);
    }
    keep
}

fn project(a: ProjectArgs) -> Outcome {
    a.source.validate(false)?;
    if !(a.ridge >= 0.0 && a.ridge.is_finite()) {
        return Err(usage("--ridge must be a non-negative number"));
    }
    inputs([a.embeddings.as_path()].into_iter().chain(a.source.input()))?;
    outputs([a.out.as_path()])?;
    let set = load_set(&a.embeddings, a.layer)?;
    let masks = a.source.load(set.dim())?;
    let groups = trainable(group_by_sense(&set));
    let groups: Vec<_> = match &masks {
        Some(m) => groups.into_iter().filter(|g| m.contains_key(g.sense_id)).collect(),
        None => groups,
    };
    let projection = lda_project(&groups, masks.as_ref(), 2, a.ridge)?;
    let mut staged = Staged::new();
    staged.write(&a.out, |w| {
        writeln!(w, "instance_id\tsense\tx\ty")?;
        for p in &projection.points {
            writeln!(w, "{}\t{}\t{}\t{}", p.instance_id, p.sense_id, p.coords[0], p.coords[1])?;
        }
        Ok(())
    })?;
    staged.commit()?;
    Ok(())
}

fn inspect(a: InspectArgs) -> Outcome {
    a.source.validate(true)?;
    inputs([a.embeddings.as_path()].into_iter().chain(a.source.input()))?;
    outputs(a.out.as_deref())?;
    let set = load_set(&a.embeddings, a.layer)?;
    let masks = a.source.load(set.dim())?.expect("mask source validated");
    let groups: Vec<_> = group_by_sense(&set).into_iter().filter(|g| masks.contains_key(g.sense_id)).collect();
    let probe = inspect_discarded(&groups, &masks, a.top_k)?;
    let mut table = String::from("a\ta_sense\tb\tb_sense\tcosine\n");
    for p in &probe.pairs {
        table.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", p.a, p.a_sense, p.b, p.b_sense, p.cosine));
    }
    let mut staged = Staged::new();
    match &a.out {
        Some(p) => staged.write(p, |w| w.write_all(table.as_bytes()))?,
        None => print!("{table}"),
    }
    staged.commit()?;
    eprintln!(
        "swt: mean cosine on discarded dimensions: within groups {:.4}, across groups {:.4}; {} records skipped",
        probe.mean_within,
        probe.mean_across,
        probe.skipped.len()
    );
    Ok(())
}
