//! Loads the toy ontology, resolves cross-references and prunes unused triples.

use std::path::Path;

use ontotopics::kb::{load_many, ParseMode};
use ontotopics::Config;

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;

    let (kb, report) = load_many(&config.kb.paths, config.registry()?, ParseMode::Lenient)?;
    println!(
        "loaded {} triples ({} duplicates, {} malformed, {} non-English literals dropped)",
        report.triples, report.duplicates, report.skipped_malformed, report.dropped_non_english
    );
    println!(
        "{} entities, {} literal triples",
        report.distinct_entities, report.literals
    );

    let (kb, refs) = kb.normalize_cross_refs();
    println!(
        "cross-references resolved: {}, unresolved: {}",
        refs.resolved, refs.unresolved
    );

    let (kb, removed) = kb.prune_triples();
    println!("pruned {removed} triples, {} remain", kb.len());

    for entity in kb.linkable_entities().iter().take(5) {
        let texts: Vec<String> = kb
            .entity_texts(entity)
            .into_iter()
            .map(|t| format!("{}={:?}", t.field, t.text))
            .collect();
        println!("{:<14} {}", entity.local_name(), texts.join(" "));
    }
    Ok(())
}
