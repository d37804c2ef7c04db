//! Expands bounded neighborhoods over the weighted toy graph.

use std::path::Path;

use ontotopics::edges::{compute_edge_weights, PipelineOptions};
use ontotopics::expand::{EdgeGraph, ExpansionParams};
use ontotopics::kb::{load_many, ParseMode};
use ontotopics::{Config, Iri};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let (kb, _) = load_many(&config.kb.paths, config.registry()?, ParseMode::Lenient)?;
    let (kb, _) = kb.normalize_cross_refs();
    let (kb, _) = kb.prune_triples();
    let edges = compute_edge_weights(&kb, &config.edges, &PipelineOptions::default())?;
    let graph = EdgeGraph::from_edges(&edges);
    println!("{} nodes, {} edges", graph.node_count(), edges.len());

    let seed = Iri::new("http://example.org/onto/Walrus")?;
    for (depth, max_distance) in [(1, 2.0), (2, 2.0), (3, 1.0)] {
        let params = ExpansionParams {
            max_depth: depth,
            max_distance,
            max_neighbors: Some(8),
        };
        let hood = graph.expand(&seed, &params);
        let shown: Vec<String> = hood
            .neighbors
            .iter()
            .map(|(e, d)| format!("{}:{d:.2}", e.local_name()))
            .collect();
        println!("depth {depth}, radius {max_distance}: {}", shown.join(" "));
    }
    Ok(())
}
