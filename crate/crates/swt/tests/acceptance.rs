//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::cell::OnceCell;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use swt::parallel::train_all_parallel;
use swt_core::analysis::{correlation_report_with_masks, spearman, within_group_cosine};
use swt_core::corpus::{group_by_sense, EmbeddingRecord, EmbeddingSet};
use swt_core::knn::{build_sense_index, predict_sense_knn, predict_word_knn, LemmaOccurrenceIndex, Query};
use swt_core::masker::{masks_from_weights, MaskRule, MaskStore, ThresholdMask};
use swt_core::swt::{SignConvention, TrainConfig, Trainer, WeightStore};
use swt_core::synth::{generate_synthetic, recovery_score, SynthConfig, SynthCorpus};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const RECOVERY_P: f64 = 0.2;
const TIME_LIMIT: Duration = Duration::from_secs(120);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn train(corpus: &SynthCorpus, config: &TrainConfig) -> Result<WeightStore, String> {
    let groups = group_by_sense(&corpus.train);
    let report = train_all_parallel(&groups, config, 0).map_err(|e| e.to_string())?;
    if !report.diagnostics.is_empty() {
        return Err(format!("{} groups not trained", report.diagnostics.len()));
    }
    Ok(report.store)
}

fn mean_recovery(corpus: &SynthCorpus, store: &WeightStore) -> Result<f64, String> {
    let mut total = 0.0;
    for (sense, state) in store {
        total += recovery_score(&state.w, &corpus.truth, sense, RECOVERY_P).map_err(|e| e.to_string())?;
    }
    Ok(total / store.len() as f64)
}

fn masks(store: &WeightStore, p: f64) -> Result<MaskStore, String> {
    masks_from_weights(store.iter().map(|(s, st)| (s.as_str(), st.w.as_slice())), MaskRule::Percentile(p))
        .map_err(|e| e.to_string())
}

/// Recovery per training seed under the given sign convention.
fn recovery_runs(corpus: &SynthCorpus, sign: SignConvention) -> Result<(Vec<f64>, Duration), String> {
    let mut scores = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let config = TrainConfig { seed, sign_convention: sign, ..TrainConfig::default() };
        let start = Instant::now();
        let store = train(corpus, &config)?;
        slowest = slowest.max(start.elapsed());
        scores.push(mean_recovery(corpus, &store)?);
    }
    Ok((scores, slowest))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn planted_recovery(corrected: &(Vec<f64>, Duration)) -> Outcome {
    let (scores, slowest) = corrected;
    let m = mean(scores);
    check(
        m >= 0.9 && *slowest < TIME_LIMIT,
        format!("mean recovery {m:.4} (per seed {scores:.4?}), slowest run {:.2}s", slowest.as_secs_f64()),
    )
}

fn masking_raises_similarity(corpus: &SynthCorpus) -> Outcome {
    let store = train(corpus, &TrainConfig { seed: SEEDS[0], ..TrainConfig::default() })?;
    let masks = masks(&store, 0.05)?;
    let groups = group_by_sense(&corpus.train);
    let plain = within_group_cosine(&groups, None).map_err(|e| e.to_string())?;
    let masked = within_group_cosine(&groups, Some(&masks)).map_err(|e| e.to_string())?;
    let compared = plain.per_group.len();
    if compared == 0 || masked.per_group.len() != compared {
        return Err("groups missing from the comparison".into());
    }
    let raised = plain.per_group.iter().zip(&masked.per_group).filter(|((_, o), (_, m))| m >= o).count();
    let share = raised as f64 / compared as f64;
    check(
        share >= 0.9,
        format!("{raised}/{compared} groups, mean cosine {:.4} -> {:.4}", plain.overall, masked.overall),
    )
}

fn swt(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_swt")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("swt {}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn all_f1(report: &str, method: &str) -> Result<f64, String> {
    let prefix = format!("{method}\tALL\t");
    let line = report.lines().find(|l| l.starts_with(&prefix)).ok_or(format!("no {method} row"))?;
    line.rsplit('\t').next().and_then(|f| f.parse().ok()).ok_or(format!("bad row {line:?}"))
}

fn wsd_non_degradation(dir: &Path) -> Outcome {
    let corpus = dir.join("heldout");
    swt(&["synth", "--out-dir", path(&corpus), "--test-fraction", "0.2"])?;
    let weights = dir.join("heldout-weights.jsonl");
    let masks = dir.join("heldout-masks.jsonl");
    swt(&["train", "--embeddings", path(&corpus.join("train.jsonl")), "--out", path(&weights)])?;
    swt(&["mask", "--weights", path(&weights), "--percent", "0.05", "--out", path(&masks)])?;
    let report = swt(&[
        "wsd-masked",
        "--train",
        path(&corpus.join("train.jsonl")),
        "--test",
        path(&corpus.join("test.jsonl")),
        "--gold",
        path(&corpus.join("gold.key")),
        "--inventory",
        path(&corpus.join("inventory.tsv")),
        "--masks",
        path(&masks),
    ])?;
    let original = all_f1(&report, "wf")?;
    let masked = all_f1(&report, "wf-masked")?;
    check(masked >= original - 0.02, format!("F1 original {original:.4}, masked {masked:.4}"))
}

const KNN_DIM: usize = 16;

fn knn_oracle() -> Outcome {
    let mut rng = oracle::rng(2024);
    let mut data = Vec::new();
    for l in 0..40 {
        let senses = rng.random_range(1..=5);
        let centers: Vec<Vec<f64>> = (0..senses).map(|_| oracle::gaussian_vec(&mut rng, KNN_DIM)).collect();
        let n = rng.random_range(1..=200);
        let occs: Vec<(Vec<f64>, String)> = (0..n)
            .map(|_| {
                let s = rng.random_range(0..senses);
                let e = oracle::gaussian_vec(&mut rng, KNN_DIM);
                (centers[s].iter().zip(&e).map(|(c, x)| c + x).collect(), format!("w{l}.n.{s}"))
            })
            .collect();
        data.push((format!("w{l}"), occs));
    }
    let mut words = LemmaOccurrenceIndex::default();
    for (lemma, occs) in &data {
        for (v, s) in occs {
            words.push(lemma, "n", s, v.clone());
        }
    }
    let centroids = build_sense_index(&words);
    let mut mismatches = 0;
    for i in 0..1000 {
        let (lemma, occs) = &data[rng.random_range(0..data.len())];
        // Half the queries reuse a stored vector to exercise exact ties.
        let q = if i % 2 == 0 {
            oracle::gaussian_vec(&mut rng, KNN_DIM)
        } else {
            occs[rng.random_range(0..occs.len())].0.clone()
        };
        let query = Query { instance_id: "q", lemma, pos: "n", vector: &q };
        let w = predict_word_knn(&query, &words, None, false, None);
        let s = predict_sense_knn(&query, &centroids, None, false);
        if w.sense_id.as_deref() != Some(oracle::word_knn(&q, occs).as_str()) {
            mismatches += 1;
        }
        if s.sense_id.as_deref() != Some(oracle::sense_knn(&q, occs).as_str()) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches over 1000 queries x 2 predictors"))
}

fn deviation(xs: &[f64], ys: &[f64], expected: f64) -> Result<f64, String> {
    Ok((spearman(xs, ys).map_err(|e| e.to_string())? - expected).abs())
}

fn spearman_exhaustive() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=2 {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        if spearman(&xs, &xs).is_ok() {
            return Err(format!("length {n} accepted"));
        }
    }
    for n in 3..=7 {
        let base: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let tied: Vec<f64> = (0..n).map(|i| (i / 2) as f64).collect();
        for perm in oracle::permutations(&base) {
            worst = worst.max(deviation(&base, &perm, oracle::spearman(&base, &perm))?);
            worst = worst.max(deviation(&base, &perm, oracle::spearman_distinct(&base, &perm))?);
            cases += 1;
        }
        for perm in oracle::permutations(&tied) {
            if perm.iter().all(|x| *x == perm[0]) {
                continue;
            }
            worst = worst.max(deviation(&base, &perm, oracle::spearman(&base, &perm))?);
            worst = worst.max(deviation(&tied, &perm, oracle::spearman(&tied, &perm))?);
            cases += 2;
        }
    }
    check(worst <= 1e-12, format!("{cases} cases of length 3..=7, max deviation {worst:.2e}, shorter inputs rejected"))
}

fn mask_cardinality() -> Outcome {
    let mut rng = oracle::rng(77);
    let percents = [5usize, 10, 15, 20];
    for trial in 0..1000 {
        let d = rng.random_range(1..=1024);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut previous: Option<Vec<bool>> = None;
        for pct in percents {
            let mask = ThresholdMask::percentile("s", &w, pct as f64 / 100.0).map_err(|e| e.to_string())?;
            let zeros = mask.keep().iter().filter(|k| !**k).count();
            if zeros != pct * d / 100 {
                return Err(format!("trial {trial}: D={d} p={pct}% zeroed {zeros}"));
            }
            if let Some(prev) = &previous {
                if prev.iter().zip(mask.keep()).any(|(a, b)| !*a && *b) {
                    return Err(format!("trial {trial}: zero set at {pct}% does not contain the smaller one"));
                }
            }
            previous = Some(mask.keep().to_vec());
        }
    }
    Ok("1000 vectors, D in 1..=1024, p in {0.05, 0.1, 0.15, 0.2}".into())
}

fn adagrad_and_determinism(corpus: &SynthCorpus, dir: &Path) -> Outcome {
    let config = TrainConfig { seed: 42, ..TrainConfig::default() };
    let mut epochs = 0;
    for g in group_by_sense(&corpus.train) {
        let mut trainer = Trainer::new(g.sense_id, g.vectors(), config.clone()).map_err(|e| e.to_string())?;
        let mut prev = trainer.state().gti.clone();
        while !trainer.is_done() {
            trainer.epoch().map_err(|e| e.to_string())?;
            let gti = &trainer.state().gti;
            if gti.iter().zip(&prev).any(|(now, before)| now < before) {
                return Err(format!("{}: gti decreased at epoch {}", g.sense_id, trainer.state().epochs_run));
            }
            prev.clone_from(gti);
            epochs += 1;
        }
    }
    let data = dir.join("determinism");
    swt(&["synth", "--out-dir", path(&data)])?;
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.join(format!("weights-{threads}.jsonl"));
        swt(&[
            "train",
            "--embeddings",
            path(&data.join("train.jsonl")),
            "--out",
            path(&out),
            "--seed",
            "42",
            "--threads",
            threads,
        ])?;
        outputs.push(fs::read(&out).map_err(|e| e.to_string())?);
    }
    check(
        outputs[0] == outputs[1],
        format!(
            "gti checked over {epochs} epochs, weights.jsonl {} bytes, 1 vs 8 threads identical: {}",
            outputs[0].len(),
            outputs[0] == outputs[1]
        ),
    )
}

fn keep_all(set: &EmbeddingSet) -> MaskStore {
    group_by_sense(set)
        .iter()
        .map(|g| {
            (
                g.sense_id.to_string(),
                ThresholdMask::from_keep(g.sense_id, vec![true; set.dim()], MaskRule::Percentile(0.0)),
            )
        })
        .collect()
}

fn correlation(corpus: &SynthCorpus) -> Outcome {
    // Synthetic groups have 100 members, so the size cutoff is lowered.
    let min_size = 50;
    let rho = |set: &EmbeddingSet| {
        correlation_report_with_masks(&group_by_sense(set), &keep_all(set), &corpus.truth.taxonomy, min_size)
            .map(|r| r.rho_original)
            .map_err(|e| e.to_string())
    };
    let aligned = rho(&corpus.train)?;
    let mut rng = oracle::rng(99);
    let mut total = 0.0;
    for _ in 0..20 {
        let mut labels: Vec<(String, Option<String>)> =
            corpus.train.records().iter().map(|r| (r.lemma.clone(), r.sense_id.clone())).collect();
        labels.shuffle(&mut rng);
        let records = corpus
            .train
            .records()
            .iter()
            .zip(labels)
            .map(|(r, (lemma, sense_id))| EmbeddingRecord { lemma, sense_id, ..r.clone() })
            .collect();
        let set = EmbeddingSet::new("shuffled", records).map_err(|e| e.to_string())?;
        total += rho(&set)?.abs();
    }
    let shuffled = total / 20.0;
    check(aligned > 0.5 && shuffled < 0.2, format!("rho aligned {aligned:.4}, shuffled mean |rho| {shuffled:.4}"))
}

fn sign_contrast(corpus: &SynthCorpus, corrected: &[f64]) -> Outcome {
    let (literal, _) = recovery_runs(corpus, SignConvention::Literal)?;
    let ok = literal.iter().zip(corrected).all(|(l, c)| l <= c);
    check(ok, format!("literal {literal:.4?} vs corrected {corrected:.4?}"))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let corpus = generate_synthetic(&SynthConfig::default()).expect("default corpus");
    let corrected = OnceCell::new();
    let corrected_runs = || corrected.get_or_init(|| recovery_runs(&corpus, SignConvention::Corrected)).clone();

    let criteria: Vec<Criterion<'_>> = vec![
        ("planted dimension recovery", Box::new(|| planted_recovery(&corrected_runs()?))),
        ("within-group similarity rises under masking", Box::new(|| masking_raises_similarity(&corpus))),
        ("WSD non-degradation", Box::new(|| wsd_non_degradation(dir.path()))),
        ("KNN oracle equivalence", Box::new(knn_oracle)),
        ("Spearman correctness", Box::new(spearman_exhaustive)),
        ("mask cardinality and nesting", Box::new(mask_cardinality)),
        ("AdaGrad accumulators and determinism", Box::new(|| adagrad_and_determinism(&corpus, dir.path()))),
        ("correlation construction", Box::new(|| correlation(&corpus))),
        ("sign convention contrast", Box::new(|| sign_contrast(&corpus, &corrected_runs()?.0))),
    ];

    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
