mod common;

use proptest::prelude::*;
use semdiv_core::corpus::SentencePair;
use semdiv_core::labels::SentenceClass;
use semdiv_core::metrics::{AggregationMode, Span, SpanLabel};
use semdiv_core::refresd::{
    dataset_stats, import_refresd_tsv, load_refresd, parse_refresd_jsonl, save_refresd, to_refresd_jsonl, AnnotatedPair,
    AnnotationRecord, Dataset, Exclusion,
};

const TSV: &str = "id\tsentence_en\tsentence_fr\tall_labels\tlabel\trationale_en\trationale_fr
p01\ta b c d\tw x y z\tnd,nd,nd\tno_meaning_difference\t0 0 0 0\t0 0 0 0
p02\ta b c d\tw x y z\tnd,nd,sd\tno_meaning_difference\t0 0.33 0 0\t0 0 0 0
p03\ta b c d\tw x y z\tsd,sd,un\tsome_meaning_difference\t0 0.67 1 0\t0 0 0.33 0
p04\ta b c d\tw x y z\tun,un,un\tunrelated\t1 1 1 1\t1 1 1 1
p05\ta b c d\tw x y z\tsd,sd,sd\tsome_meaning_difference\t0 0 1 1\t0 0 0 0
p06\ta b c d\tw x y z\tnd,sd,un\t\t0 0 0.33 0.67\t0 0 0 0
p07\ta b c d\tw x y z\tnd,un,un\t\t0 0.67 0.67 0\t0 0 0 0
p08\ta b c d\tw x y z\tun,un,sd\tunrelated\t1 1 1 0.67\t1 1 1 1
p09\ta b c d\tw x y z\tsd,nd,sd\tno_meaning_difference\t0.67 0 0 0\t0 0 0 0
p10\ta b c d\tw x y z\tnd,nd,nd\tno_meaning_difference\t\t
";

#[test]
fn ten_pair_tally() {
    let (ds, report) = import_refresd_tsv(TSV).unwrap();
    assert_eq!(report.pairs, 10);
    assert_eq!(report.excluded, 2);
    // p09 was released as ND but its votes say SD
    assert_eq!(report.label_mismatches, vec!["p09".to_string()]);
    assert_eq!(ds.pairs[5].excluded, Some(Exclusion::Tridisagreement));
    assert_eq!(ds.pairs[6].excluded, Some(Exclusion::ExtremeBidisagreement));

    let st = dataset_stats(&ds);
    assert_eq!(
        (st.total, st.excluded, st.no_meaning_difference, st.some_meaning_difference, st.unrelated),
        (10, 2, 3, 3, 2)
    );
    assert!((st.pct_divergent - 62.5).abs() < 1e-12);
    assert!((st.pct_fine_grained - 37.5).abs() < 1e-12);

    // coverage counts 0,2,3,0 on p03's source side
    let p03 = &ds.pairs[2];
    let src = |m| p03.gold_tokens(m).unwrap().src.iter().map(|l| l.is_div()).collect::<Vec<_>>();
    assert_eq!(src(AggregationMode::Union), [false, true, true, false]);
    assert_eq!(src(AggregationMode::PairwiseUnion), [false, true, true, false]);
    assert_eq!(src(AggregationMode::Intersection), [false, false, true, false]);
}

fn fixture(n_pairs: usize, salt: u64) -> Dataset {
    use rand::Rng;
    let mut r = common::rng(salt);
    let pairs = (0..n_pairs)
        .map(|i| {
            let id = format!("f{i}");
            let pair = SentencePair::from_raw(id.clone(), "le chat noir dort ici", "the black cat sleeps here now");
            let recs = (0..3)
                .map(|k| AnnotationRecord {
                    annotator_id: format!("ann{}", (i + k) % 5),
                    pair_id: id.clone(),
                    spans: common::random_spanset(&mut r, 5, 6),
                    sentence_class: SentenceClass::ALL[r.gen_range(0..3)],
                    notes: (k == 1).then(|| format!("note {i}")),
                })
                .collect();
            AnnotatedPair::new(pair, recs).unwrap()
        })
        .collect();
    Dataset { pairs }
}

#[test]
fn records_round_trip_through_a_file() {
    let ds = fixture(7, 1);
    let partial = AnnotatedPair::new(ds.pairs[0].pair.clone(), ds.pairs[0].records[..2].to_vec());
    assert!(partial.is_err(), "pairs need exactly three records");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.jsonl");
    save_refresd(&ds, &path).unwrap();
    assert_eq!(load_refresd(&path).unwrap(), ds);
}

#[test]
fn malformed_lines_report_their_number() {
    let ds = fixture(2, 4);
    let mut text = to_refresd_jsonl(&ds);
    text.push_str("{\"pair\": 3}\n");
    let err = parse_refresd_jsonl(&text).unwrap_err().to_string();
    assert!(err.contains(&format!("{}", text.lines().count())), "{err}");
}

#[test]
fn out_of_range_spans_are_rejected() {
    let pair = SentencePair::from_raw("x", "a b", "c d");
    let recs = (0..3)
        .map(|k| AnnotationRecord {
            annotator_id: format!("a{k}"),
            pair_id: "x".into(),
            spans: semdiv_core::metrics::SpanSet::new(vec![Span::new(1, 3, SpanLabel::Added)], vec![]),
            sentence_class: SentenceClass::Unrelated,
            notes: None,
        })
        .collect();
    assert!(AnnotatedPair::new(pair, recs).is_err());
}

proptest! {
    #[test]
    fn jsonl_round_trip(n in 1usize..12, salt in any::<u64>()) {
        let ds = fixture(n, salt);
        prop_assert_eq!(parse_refresd_jsonl(&to_refresd_jsonl(&ds)).unwrap(), ds);
    }
}
