use std::path::Path;

use assert_cmd::Command;
use semdiv_core::corpus::SentencePair;
use semdiv_core::labels::SentenceClass;
use semdiv_core::metrics::{Span, SpanLabel, SpanSet};
use semdiv_core::refresd::{save_refresd, AnnotatedPair, AnnotationRecord, Dataset};
use serde_json::Value;

fn semdiv(dir: &Path) -> Command {
    let mut c = Command::cargo_bin("semdiv").unwrap();
    c.current_dir(dir);
    c
}

fn json_out(c: &mut Command) -> Value {
    let out = c.assert().success().get_output().stdout.clone();
    serde_json::from_slice(&out).unwrap()
}

fn fixture_dataset(path: &Path) {
    let classes = [
        SentenceClass::NoMeaningDifference,
        SentenceClass::SomeMeaningDifference,
        SentenceClass::Unrelated,
    ];
    let pairs = (0..9)
        .map(|i| {
            let id = format!("d{i}");
            let pair = SentencePair::from_raw(id.clone(), "the dog sees a cat .", "le chien voit un chat .");
            let class = classes[i % 3];
            let recs = ["x", "y", "z"]
                .iter()
                .enumerate()
                .map(|(k, a)| AnnotationRecord {
                    annotator_id: a.to_string(),
                    pair_id: id.clone(),
                    spans: if class == SentenceClass::NoMeaningDifference {
                        SpanSet::default()
                    } else {
                        SpanSet::new(vec![Span::new(1, 2 + k % 2, SpanLabel::Changed)], vec![])
                    },
                    sentence_class: if k == 2 && i == 3 { SentenceClass::Unrelated } else { class },
                    notes: None,
                })
                .collect();
            AnnotatedPair::new(pair, recs).unwrap()
        })
        .collect();
    save_refresd(&Dataset { pairs }, path).unwrap();
}

#[test]
fn concatenation_emits_four_items_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(semdiv(dir.path()).args([
        "generate",
        "--strategy",
        "concatenation",
        "--seeds",
        "5000",
        "--out",
        "items.jsonl",
    ]));
    assert_eq!(v["items"], 20000);
    let text = std::fs::read_to_string(dir.path().join("items.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 20000);
}

#[test]
fn pipeline_from_toy_seeds_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.toml"),
        "[train]\nmax_epochs = 1\ndims = { d = 8, h = 8 }\n\n[eval]\nhistogram_bins = 5\n",
    )
    .unwrap();

    let v = json_out(semdiv(d).args([
        "toy",
        "--seeds",
        "80",
        "--out",
        "seeds.jsonl",
        "--lexicon-out",
        "lex.tsv",
        "--scores-out",
        "scores.tsv",
    ]));
    assert_eq!(v["seeds"], 80);

    let v = json_out(semdiv(d).args([
        "generate",
        "--seeds",
        "seeds.jsonl",
        "--lexicon",
        "lex.tsv",
        "--strategy",
        "divergence-ranking",
        "--out",
        "items.jsonl",
    ]));
    assert!(v["items"].as_u64().unwrap() > 200);

    let v = json_out(semdiv(d).args([
        "--config",
        "cfg.toml",
        "train",
        "--seeds",
        "seeds.jsonl",
        "--lexicon",
        "lex.tsv",
        "--dev-count",
        "20",
        "--objective",
        "multitask",
        "--margin",
        "5",
        "--out",
        "model.json",
        "--log",
        "train.jsonl",
    ]));
    assert_eq!(v["train_seeds"], 60);
    assert!(v["dev"]["ranking_accuracy"].is_number());
    assert_eq!(std::fs::read_to_string(d.join("train.jsonl")).unwrap().lines().count(), 1);

    fixture_dataset(&d.join("refresd.jsonl"));
    std::fs::write(
        d.join("laser.tsv"),
        (0..9).map(|i| format!("d{i}\t1.0{i}\n")).collect::<String>(),
    )
    .unwrap();
    let v = json_out(semdiv(d).args([
        "--config",
        "cfg.toml",
        "evaluate",
        "--model",
        "model.json",
        "--dataset",
        "refresd.jsonl",
        "--baseline-scores",
        "laser.tsv",
        "--out",
        "report.json",
        "--plots",
        "plots",
    ]));
    assert_eq!(v["pairs"], 8);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    for key in ["sentence", "baseline", "token", "fine_grained", "agreement"] {
        assert!(!report[key].is_null(), "{key} missing");
    }
    assert_eq!(report["token"].as_array().unwrap().len(), 3);
    assert_eq!(report["fine_grained"].as_array().unwrap().len(), 4);
    for f in ["plots.csv", "scores.svg", "divpct.svg"] {
        assert!(d.join("plots").join(f).exists(), "{f}");
    }

    let v = json_out(semdiv(d).args(["stats", "--dataset", "refresd.jsonl"]));
    assert_eq!(v["no_meaning_difference"], 2);
    assert_eq!(v["some_meaning_difference"], 3);
    assert_eq!(v["unrelated"], 3);
    assert_eq!(v["excluded"], 1);

    let v = json_out(semdiv(d).args(["iaa", "--dataset", "refresd.jsonl"]));
    assert!(v["krippendorff_alpha"].as_f64().unwrap() < 1.0);
    assert!(v["span"]["mean"].is_number());
}

#[test]
fn filter_and_seed_selection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("corpus.tsv"),
        "1\tthe cat sat on the mat today\tle chat est sur le tapis aujourd'hui\n\
         2\tshort\tcourt\n\
         3\tthe dog ran in the park at noon\tle chien courait dans le parc à midi\n\
         4\t1 2 3 4 5 6\t1 2 3 4 5 6\n\
         5\tthe bird sang in the tree all day\tl'oiseau chantait dans l'arbre toute la journée\n",
    )
    .unwrap();
    std::fs::write(d.join("scores.tsv"), "1\t1.2\n3\t1.1\n5\t1.3\n").unwrap();
    let v = json_out(semdiv(d).args([
        "filter",
        "--input",
        "corpus.tsv",
        "--out",
        "kept.tsv",
        "--rejected",
        "rejected.jsonl",
        "--scores",
        "scores.tsv",
        "--k",
        "2",
        "--dev-n",
        "1",
        "--train-out",
        "train.tsv",
        "--dev-out",
        "dev.tsv",
    ]));
    assert_eq!(v["kept"], 3);
    assert_eq!(v["rejected"], 2);
    assert_eq!(v["seed_train"], 1);
    assert_eq!(v["seed_dev"], 1);
    let kept = std::fs::read_to_string(d.join("kept.tsv")).unwrap();
    assert!(!kept.contains("short"));
}

#[test]
fn invalid_input_exits_non_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    semdiv(d).args(["generate", "--strategy", "nonsense", "--seeds", "5", "--out", "x"]).assert().failure();
    semdiv(d).args(["stats", "--dataset", "missing.jsonl"]).assert().failure().stderr(predicates_str("missing.jsonl"));
    std::fs::write(d.join("bad.toml"), "[train]\nmargin = -2.0\n").unwrap();
    semdiv(d)
        .args(["--config", "bad.toml", "stats", "--dataset", "x.jsonl"])
        .assert()
        .failure()
        .stderr(predicates_str("margin"));
    semdiv(d).args(["train", "--seeds", "none.jsonl", "--out", "m.json"]).assert().failure();
}

fn predicates_str(needle: &'static str) -> impl predicates::Predicate<str> {
    predicates::str::contains(needle)
}
