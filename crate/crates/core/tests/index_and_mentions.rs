mod common;

use common::*;
use ontotopics::mentions::{
    merge_keywords, Document, MentionDetector, MentionSource, NounRunChunker, ProvidedMentions,
};
use ontotopics::vectors::tokenize;
use ontotopics::Index;
use proptest::prelude::*;

fn corpus_docs() -> Vec<Document> {
    std::fs::read_to_string(corpus_path())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn hits(index: &Index, q: &str, k: usize) -> Vec<(String, f64)> {
    index
        .query_candidates(q, k)
        .iter()
        .map(|h| (h.record.uri.to_string(), h.retrieval_score))
        .collect()
}

#[test]
fn retrieval_is_deterministic_and_recalls_token_matches() {
    let dir = tempfile::tempdir().unwrap();
    let index = Index::open(&build_toy_index(dir.path())).unwrap();
    let mut queries: Vec<String> = corpus_docs()
        .iter()
        .flat_map(|d| NounRunChunker::default().detect(d))
        .map(|m| m.surface)
        .collect();
    queries.extend(["seal", "sea ice", "heavy metal", "oil"].map(String::from));
    for q in &queries {
        let first = hits(&index, q, 30);
        assert_eq!(first, hits(&index, q, 30), "query {q:?}");

        let tokens = tokenize(q);
        if tokens.is_empty() {
            continue;
        }
        let matching: Vec<String> = index
            .records()
            .iter()
            .filter(|r| {
                r.texts.iter().any(|t| {
                    let have = tokenize(&t.text);
                    tokens.iter().all(|tok| have.contains(tok))
                })
            })
            .map(|r| r.uri.to_string())
            .collect();
        let got = hits(&index, q, matching.len().max(1));
        for m in &matching {
            assert!(
                got.iter().any(|(u, _)| u == m),
                "{m} missing for {q:?}: {got:?}"
            );
        }
    }
}

#[test]
fn detected_spans_slice_the_text() {
    let detector = NounRunChunker::default();
    for doc in corpus_docs() {
        let text = doc.text();
        let mentions = detector.detect(&doc);
        assert!(!mentions.is_empty());
        assert_eq!(mentions, detector.detect(&doc));
        for m in &mentions {
            let (s, e) = m.char_span.unwrap();
            assert_eq!(&text[s..e], m.surface);
            assert_eq!(m.lemma, m.lemma.to_lowercase());
        }
    }
}

#[test]
fn gold_mentions_get_spans_and_sentences() {
    let provided = ProvidedMentions::new();
    for doc in corpus_docs() {
        let text = doc.text();
        let mentions = provided.detect(&doc);
        assert_eq!(mentions.len(), doc.mentions.as_ref().unwrap().len());
        for m in &mentions {
            let (s, e) = m
                .char_span
                .expect("every gold surface occurs in its document");
            assert_eq!(&text[s..e], m.surface);
            assert!(m.sentence.contains(&m.surface));
        }
    }
}

proptest! {
    #[test]
    fn spans_hold_for_arbitrary_text(words in prop::collection::vec("[A-Za-zé]{1,9}|[.,;!?]|e\\.g\\.|[0-9]{1,3}", 1..40)) {
        let doc = Document {
            id: "x".into(),
            title: String::new(),
            abstract_text: words.join(" "),
            keywords: vec![],
            mentions: None,
        };
        let text = doc.text();
        for m in NounRunChunker::default().detect(&doc) {
            let (s, e) = m.char_span.unwrap();
            prop_assert_eq!(&text[s..e], m.surface.as_str());
            prop_assert!(!m.surface.is_empty());
        }
    }

    #[test]
    fn keywords_never_drop_text_mentions(keywords in prop::collection::vec("[a-z]{2,6}( [a-z]{2,6})?", 0..6)) {
        let doc = Document {
            id: "k".into(),
            title: "Polar bear survival".into(),
            abstract_text: "Sea ice loss threatens the polar bear and the walrus.".into(),
            keywords,
            mentions: None,
        };
        let detected = NounRunChunker::default().detect(&doc);
        let merged = merge_keywords(detected.clone(), &doc);
        let text_count = |ms: &[ontotopics::mentions::Mention]| ms.iter().filter(|m| m.source == MentionSource::Text).count();
        prop_assert_eq!(text_count(&merged), text_count(&detected));
        prop_assert!(merged.len() >= detected.len());
        prop_assert_eq!(&merged[..detected.len()], &detected[..]);
    }
}
