mod common;

use common::*;
use ontotopics::edges::{
    compute_edge_weights, group_cardinality, link_counts, EdgeDirection, EdgeWeightParams,
    PipelineOptions, MIN_MEMORY_BUDGET,
};
use ontotopics::kb::{parse_triples, Iri, KnowledgeBase, ParseMode, RegistrySpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kb_from(text: &str) -> KnowledgeBase {
    let (triples, _) = parse_triples(text, ParseMode::Strict).unwrap();
    KnowledgeBase::from_triples(triples, RegistrySpec::default().build().unwrap()).0
}

fn iri(s: &str) -> Iri {
    Iri::new(format!("http://t/{s}")).unwrap()
}

fn linear_kb(extra: &str) -> KnowledgeBase {
    kb_from(&format!(
        "<http://t/A> <http://t/p> <http://t/B> .\n{extra}"
    ))
}

#[test]
fn cleaning_is_idempotent_on_toy_kb() {
    let config = toy_config();
    let (kb, _) = ontotopics::kb::load_many(
        &config.kb.paths,
        config.registry().unwrap(),
        ParseMode::Lenient,
    )
    .unwrap();
    let (once, _) = kb.normalize_cross_refs();
    let (twice, report) = once.clone().normalize_cross_refs();
    assert_eq!(once, twice);
    assert_eq!(report.resolved, 0);

    let (pruned, removed) = once.clone().prune_triples();
    assert!(removed > 0);
    let (again, removed_again) = pruned.clone().prune_triples();
    assert_eq!(pruned, again);
    assert_eq!(removed_again, 0);
}

#[test]
fn pruning_keeps_generated_close_matches() {
    let config = toy_config();
    let (kb, _) = ontotopics::kb::load_many(
        &config.kb.paths,
        config.registry().unwrap(),
        ParseMode::Lenient,
    )
    .unwrap();
    let (normalized, report) = kb.normalize_cross_refs();
    assert!(report.resolved > 0);
    let close: Vec<_> = normalized
        .triples()
        .iter()
        .filter(|t| {
            normalized
                .registry()
                .close_match_predicates()
                .contains(&t.predicate)
        })
        .cloned()
        .collect();
    assert!(!close.is_empty());
    let (pruned, _) = normalized.prune_triples();
    for t in &close {
        assert!(pruned.triples().contains(t), "{t:?} pruned");
    }
}

#[test]
fn entity_texts_are_repeatable() {
    let kb = cleaned_toy_kb();
    for e in kb.linkable_entities() {
        assert_eq!(kb.entity_texts(&e), kb.entity_texts(&e));
    }
}

#[test]
fn link_and_group_counts_match_scans() {
    let kb = kb_from(
        "<http://t/A> <http://t/p> <http://t/B> .\n<http://t/B> <http://t/q> <http://t/C> .\n",
    );
    let l = link_counts(&kb);
    assert_eq!(
        (l.get(&iri("A")), l.get(&iri("B")), l.get(&iri("C"))),
        (1, 2, 1)
    );
    assert_eq!(l.get(&iri("Z")), 0);
    assert_eq!(
        group_cardinality(&kb, &iri("B"), &iri("p"), EdgeDirection::Ops),
        1
    );

    let kb = kb_from(
        "<http://t/A> <http://t/p> <http://t/B> .\n<http://t/A> <http://t/p> <http://t/C> .\n",
    );
    assert_eq!(
        group_cardinality(&kb, &iri("A"), &iri("p"), EdgeDirection::Spo),
        2
    );
}

#[test]
fn worked_weight_example() {
    let kb = kb_from(
        "<http://t/A> <http://t/p> <http://t/B> .\n<http://t/B> <http://t/q> <http://t/C> .\n",
    );
    let params = EdgeWeightParams {
        default_base_weight: 1.0,
        ..EdgeWeightParams::default()
    };
    let edges = compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap();
    let ab = edges
        .iter()
        .find(|e| e.edge.source == iri("A") && e.edge.direction == EdgeDirection::Spo)
        .unwrap();
    assert!((ab.weight - std::f64::consts::SQRT_2).abs() < 1e-12);

    let flat = EdgeWeightParams {
        f_l: 0.0,
        f_g: 0.0,
        default_base_weight: 0.7,
        ..EdgeWeightParams::default()
    };
    let edges = compute_edge_weights(&kb, &flat, &PipelineOptions::default()).unwrap();
    assert!(edges.iter().all(|e| e.weight == 0.7));
}

#[test]
fn cheapest_four_of_ten_parallel_edges() {
    // targets get different link counts so weights differ
    let mut text = String::new();
    for i in 0..10 {
        text.push_str(&format!("<http://t/A> <http://t/p> <http://t/T{i}> .\n"));
        for j in 0..i {
            text.push_str(&format!("<http://t/T{i}> <http://t/q> <http://t/X{j}> .\n"));
        }
    }
    let kb = kb_from(&text);
    let params = EdgeWeightParams::default();
    let edges = compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap();
    let group: Vec<_> = edges
        .iter()
        .filter(|e| e.edge.source == iri("A") && e.edge.predicate == iri("p"))
        .collect();
    assert_eq!(group.len(), 4);
    let mut want = brute_force_edges(&kb, &params)
        .into_iter()
        .filter(|((s, p, _, _), _)| s == "http://t/A" && p == "http://t/p")
        .map(|((_, _, o, _), _)| o)
        .collect::<Vec<_>>();
    want.sort();
    let mut got: Vec<String> = group.iter().map(|e| e.edge.target.to_string()).collect();
    got.sort();
    assert_eq!(got, want);
    assert_eq!(
        got,
        ["http://t/T0", "http://t/T1", "http://t/T2", "http://t/T3"]
    );
}

#[test]
fn budget_below_minimum_rejected() {
    let kb = linear_kb("");
    let opts = PipelineOptions {
        memory_budget: MIN_MEMORY_BUDGET - 1,
        spill_dir: None,
    };
    assert!(compute_edge_weights(&kb, &EdgeWeightParams::default(), &opts).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_independent_of_budget(seed in any::<u64>(), budget in prop::sample::select(vec![MIN_MEMORY_BUDGET, 2048, 8192, 1 << 20])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_kb(&mut rng, 200);
        let reference = compute_edge_weights(&r.kb, &r.params, &PipelineOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = PipelineOptions { memory_budget: budget, spill_dir: Some(dir.path()) };
        let other = compute_edge_weights(&r.kb, &r.params, &opts).unwrap();
        prop_assert_eq!(reference.len(), other.len());
        for (a, b) in reference.iter().zip(&other) {
            prop_assert_eq!(&a.edge, &b.edge);
            prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        }
    }

    #[test]
    fn two_candidates_per_iri_triple(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = random_kb(&mut rng, 120);
        r.params.c_max = 10_000;
        let edges = compute_edge_weights(&r.kb, &r.params, &PipelineOptions::default()).unwrap();
        let iri_triples = r.kb.triples().iter().filter(|t| t.object.as_iri().is_some()).count();
        prop_assert_eq!(edges.len(), 2 * iri_triples);
        prop_assert!(edges.iter().all(|e| e.weight > 0.0));
    }

    #[test]
    fn weight_grows_with_target_links(f_l in 0.01f64..2.0, k in 0usize..8) {
        let extra = |n: usize| (0..n).map(|i| format!("<http://t/B> <http://t/q> <http://t/X{i}> .\n")).collect::<String>();
        let params = EdgeWeightParams { f_l, c_max: 100, ..EdgeWeightParams::default() };
        let weight = |n: usize| {
            let kb = linear_kb(&extra(n));
            compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap()
                .into_iter()
                .find(|e| e.edge.source == iri("A"))
                .unwrap()
                .weight
        };
        prop_assert!(weight(k + 1) >= weight(k));
    }

    #[test]
    fn weight_grows_with_group_size(f_g in 0.01f64..2.0, k in 0usize..8) {
        let extra = |n: usize| (0..n).map(|i| format!("<http://t/A> <http://t/p> <http://t/C{i}> .\n")).collect::<String>();
        let params = EdgeWeightParams { f_g, c_max: 100, ..EdgeWeightParams::default() };
        let weight = |n: usize| {
            let kb = linear_kb(&extra(n));
            compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap()
                .into_iter()
                .find(|e| e.edge.source == iri("A") && e.edge.target == iri("B"))
                .unwrap()
                .weight
        };
        prop_assert!(weight(k + 1) >= weight(k));
    }
}
