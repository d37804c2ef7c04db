//! Turns triples into weighted traversal edges in both directions.

use ontotopics::edges::{
    compute_edge_weights, group_cardinality, link_counts, EdgeDirection, EdgeWeightParams,
    PipelineOptions,
};
use ontotopics::kb::{parse_triples, ParseMode, RegistrySpec};
use ontotopics::{Iri, KnowledgeBase};

const TRIPLES: &str = r#"
<http://ex/Walrus> <http://ex/eats> <http://ex/Clam> .
<http://ex/Walrus> <http://ex/eats> <http://ex/Crab> .
<http://ex/Walrus> <http://ex/eats> <http://ex/Worm> .
<http://ex/Walrus> <http://ex/habitat> <http://ex/SeaIce> .
<http://ex/Clam> <http://www.w3.org/2000/01/rdf-schema#label> "clam"@en .
<http://ex/SeaIce> <http://www.w3.org/2000/01/rdf-schema#label> "sea ice"@en .
<http://ex/SeaIce> <http://www.w3.org/2004/02/skos/core#altLabel> "pack ice"@en .
"#;

fn main() -> anyhow::Result<()> {
    let (triples, _) = parse_triples(TRIPLES, ParseMode::Strict)?;
    let kb = KnowledgeBase::from_triples(triples, RegistrySpec::default().build()?).0;

    let links = link_counts(&kb);
    let walrus = Iri::new("http://ex/Walrus")?;
    let eats = Iri::new("http://ex/eats")?;
    println!("links(Walrus) = {}", links.get(&walrus));
    println!(
        "links(SeaIce) = {}",
        links.get(&Iri::new("http://ex/SeaIce")?)
    );
    println!(
        "Walrus eats: {} objects",
        group_cardinality(&kb, &walrus, &eats, EdgeDirection::Spo)
    );

    // c_max of 2 keeps only the cheapest two of the three eats edges
    let params = EdgeWeightParams {
        c_max: 2,
        default_base_weight: 1.0,
        ..EdgeWeightParams::default()
    };
    for e in compute_edge_weights(&kb, &params, &PipelineOptions::default())? {
        println!(
            "{:>7}  -{:<8} {:?} -> {:<7} {:.4}",
            e.edge.source.local_name(),
            e.edge.predicate.local_name(),
            e.edge.direction,
            e.edge.target.local_name(),
            e.weight
        );
    }
    Ok(())
}
