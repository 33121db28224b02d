use std::fs;
use std::path::Path;

use proptest::prelude::*;
use swt::formats::embeddings::{detect_format, read_jsonl, read_packed, write_jsonl, write_packed, EmbeddingFormat};
use swt::formats::load_embeddings;
use swt::formats::tables::{read_gold, read_inventory, write_gold, write_inventory};
use swt::formats::truth::{read_truth, write_truth};
use swt_core::corpus::{EmbeddingRecord, EmbeddingSet};
use swt_core::synth::{generate_synthetic, SynthConfig};

fn component() -> impl Strategy<Value = f32> {
    prop_oneof![
        -1e6f32..1e6,
        -1.0f32..1.0,
        Just(f32::MIN_POSITIVE),
        Just(-f32::MAX),
        Just(f32::MAX),
        Just(1e-40f32),
        Just(0.0f32),
    ]
}

fn set_strategy() -> impl Strategy<Value = EmbeddingSet> {
    (1usize..12).prop_flat_map(|dim| {
        prop::collection::vec(
            (prop::collection::vec(component(), dim), "[a-z%.é]{0,6}", prop::option::of("[a-z%:0-9]{1,8}"), -3i32..13),
            1..20,
        )
        .prop_map(move |rows| {
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (mut vector, lemma, sense, layer))| {
                    if vector.iter().all(|x| *x == 0.0) {
                        vector[0] = 1.0;
                    }
                    EmbeddingRecord {
                        instance_id: format!("d.s{i}.t{i}"),
                        lemma,
                        pos: "n".into(),
                        sense_id: sense,
                        layer,
                        vector,
                    }
                })
                .collect();
            EmbeddingSet::new("model-x", records).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn packed_round_trip_is_bit_exact(set in set_strategy()) {
        let mut buf = Vec::new();
        write_packed(&set, &mut buf).unwrap();
        let back = read_packed(&buf[..], Path::new("x.swte"), "model-x").unwrap();
        prop_assert_eq!(back.dim(), set.dim());
        for (a, b) in set.records().iter().zip(back.records()) {
            prop_assert_eq!(a.vector.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.vector.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!((&a.instance_id, &a.lemma, &a.pos, &a.sense_id, a.layer), (&b.instance_id, &b.lemma, &b.pos, &b.sense_id, b.layer));
        }
    }

    #[test]
    fn jsonl_round_trip(set in set_strategy()) {
        let mut buf = Vec::new();
        write_jsonl(&set, &mut buf).unwrap();
        let back = read_jsonl(&buf[..], Path::new("x.jsonl")).unwrap();
        prop_assert_eq!(back.dim(), set.dim());
        prop_assert_eq!(back.model_id(), "model-x");
        for (a, b) in set.records().iter().zip(back.records()) {
            prop_assert_eq!(&a.instance_id, &b.instance_id);
            prop_assert_eq!(&a.sense_id, &b.sense_id);
            for (x, y) in a.vector.iter().zip(&b.vector) {
                prop_assert!((f64::from(*x) - f64::from(*y)).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn files_are_detected_by_content() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_synthetic(&SynthConfig {
        n_groups: 3,
        group_size: 5,
        dim: 8,
        signal_dims: 4,
        ..SynthConfig::default()
    })
    .unwrap();
    let packed = dir.path().join("layer2.bin");
    let jsonl = dir.path().join("layer2.txt");
    write_packed(&corpus.train, fs::File::create(&packed).unwrap()).unwrap();
    write_jsonl(&corpus.train, fs::File::create(&jsonl).unwrap()).unwrap();
    assert_eq!(detect_format(&packed).unwrap(), EmbeddingFormat::Packed);
    assert_eq!(detect_format(&jsonl).unwrap(), EmbeddingFormat::Jsonl);
    let a = load_embeddings(&packed, None).unwrap();
    let b = load_embeddings(&jsonl, None).unwrap();
    assert_eq!(a.model_id(), "layer2");
    assert_eq!(b.model_id(), "synth");
    assert_eq!(a.records(), b.records());
    assert!(load_embeddings(&jsonl, Some(EmbeddingFormat::Packed)).is_err());
    assert!(load_embeddings(&dir.path().join("missing"), None).is_err());
}

#[test]
fn tables_round_trip() {
    let corpus = generate_synthetic(&SynthConfig { test_fraction: 0.25, ..SynthConfig::default() }).unwrap();
    let mut buf = Vec::new();
    write_inventory(&corpus.inventory, &mut buf).unwrap();
    assert_eq!(read_inventory(&buf[..], Path::new("i")).unwrap(), corpus.inventory);
    buf.clear();
    write_gold(&corpus.gold, &mut buf).unwrap();
    assert_eq!(read_gold(&buf[..], Path::new("g")).unwrap(), corpus.gold);
    buf.clear();
    write_truth(&corpus.truth.signal_dims, &mut buf).unwrap();
    assert_eq!(read_truth(&buf[..], Path::new("t")).unwrap(), corpus.truth.signal_dims);
}

/// Per-layer files as the embedding exporter writes them: Python `json.dumps`
/// spacing, null senses for unannotated tokens, one file per layer.
#[test]
fn exported_layer_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = [("d000.s000.t001", "bank", "n", "\"bank%1:14:00::\""), ("d000.s000.t004", "run", "v", "null")];
    let mut paths = Vec::new();
    for (layer, scale) in [(4, 1.0), (-1, 0.5)] {
        let mut text = String::from("{\"dim\": 3, \"model\": \"toy-model\"}\n");
        for (k, (id, lemma, pos, sense)) in tokens.iter().enumerate() {
            let v = [scale * (k as f64 + 1.0), -0.25, 1e-3];
            text.push_str(&format!(
                "{{\"id\": \"{id}\", \"lemma\": \"{lemma}\", \"pos\": \"{pos}\", \"sense\": {sense}, \"layer\": {layer}, \"vec\": [{}, {}, {}]}}\n",
                v[0], v[1], v[2]
            ));
        }
        let path = dir.path().join(format!("toy-model.layer{layer}.jsonl"));
        fs::write(&path, text).unwrap();
        paths.push((path, layer));
    }
    for (path, layer) in &paths {
        assert_eq!(detect_format(path).unwrap(), EmbeddingFormat::Jsonl);
        let set = load_embeddings(path, None).unwrap();
        assert_eq!((set.model_id(), set.dim(), set.len()), ("toy-model", 3, 2));
        assert_eq!(set.labeled().count(), 1);
        assert!(set.records().iter().all(|r| r.layer == *layer));
        assert_eq!(set.records()[0].sense_id.as_deref(), Some("bank%1:14:00::"));
        assert_eq!(set.records()[1].vector[1], -0.25);
    }
}
