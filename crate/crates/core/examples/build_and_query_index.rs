//! Builds the persistent index from the reference config and queries it.

use std::path::Path;

use ontotopics::{build_index_from_config, Config, Index};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("index");

    let report = build_index_from_config(&config, &out)?;
    for (stage, elapsed, summary) in &report.stages {
        println!("{stage:<10} {:>8.2?}  {summary}", elapsed);
    }
    println!("content hash {}", report.manifest.content_hash);

    let index = Index::open(&out)?;
    index.verify()?;
    for query in ["seal", "polar bears", "omega 3", "microplastics"] {
        let hits: Vec<String> = index
            .query_candidates(query, 4)
            .iter()
            .map(|h| format!("{}({:.2})", h.record.uri.local_name(), h.retrieval_score))
            .collect();
        println!("{query:<14} {}", hits.join(" "));
    }
    Ok(())
}
