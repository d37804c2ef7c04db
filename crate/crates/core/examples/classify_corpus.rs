//! Builds the toy index and classifies the bundled corpus, comparing the
//! result with the expected topics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ontotopics::mentions::Document;
use ontotopics::{build_index_from_config, Classifier, Config};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("index");
    build_index_from_config(&config, &out)?;
    let classifier = Classifier::open(&out, None)?;

    let expected: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&fs::read_to_string(data.join("toy_expected.json"))?)?;
    let (mut hits, mut predicted, mut gold) = (0, 0, 0);
    for line in fs::read_to_string(data.join("toy_corpus.jsonl"))?.lines() {
        let doc: Document = serde_json::from_str(line)?;
        let topics = classifier.classify_document(&doc)?;
        let labels: Vec<String> = topics
            .iter()
            .map(|t| format!("{}({:.2})", t.label, t.final_score))
            .collect();
        println!("{:<4} {}", doc.id, labels.join(", "));
        if let Some(want) = expected.get(&doc.id) {
            predicted += topics.len();
            gold += want.len();
            hits += topics
                .iter()
                .filter(|t| want.contains(&t.entity.to_string()))
                .count();
        }
    }
    println!(
        "precision {:.2} recall {:.2}",
        hits as f64 / predicted.max(1) as f64,
        hits as f64 / gold.max(1) as f64
    );
    Ok(())
}
