//! Computes edge weights under a tiny memory budget so records spill to disk,
//! then checks the result against the in-memory run.

use std::path::Path;

use ontotopics::edges::{compute_edge_weights, PipelineOptions, MIN_MEMORY_BUDGET};
use ontotopics::kb::{load_many, ParseMode};
use ontotopics::Config;

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let (kb, _) = load_many(&config.kb.paths, config.registry()?, ParseMode::Lenient)?;
    let (kb, _) = kb.normalize_cross_refs();
    let (kb, _) = kb.prune_triples();

    let in_memory = compute_edge_weights(&kb, &config.edges, &PipelineOptions::default())?;

    let spill = tempfile::tempdir()?;
    let opts = PipelineOptions {
        memory_budget: MIN_MEMORY_BUDGET,
        spill_dir: Some(spill.path()),
    };
    let spilled = compute_edge_weights(&kb, &config.edges, &opts)?;

    let identical = in_memory.len() == spilled.len()
        && in_memory
            .iter()
            .zip(&spilled)
            .all(|(a, b)| a.edge == b.edge && a.weight.to_bits() == b.weight.to_bits());
    println!(
        "{} edges with a {MIN_MEMORY_BUDGET} byte budget",
        spilled.len()
    );
    println!("identical to in-memory run: {identical}");
    println!(
        "spill files left behind: {}",
        std::fs::read_dir(spill.path())?.count()
    );
    Ok(())
}
