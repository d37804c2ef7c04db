//! Lexical character n-gram vectors and mean-pooled word embeddings.

use std::path::Path;

use ontotopics::vectors::{cosine, lexical_vector, semantic_vector, EmbeddingTable};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let table = EmbeddingTable::load(&data.join("toy_embeddings.txt"))?;
    println!(
        "{} embeddings of dimension {}",
        table.len(),
        table.dimension()
    );

    let pairs = [
        ("polar bear", "Polar  Bears"),
        ("sea ice", "pack ice"),
        ("seal", "earless seal"),
        ("seal", "gasket"),
        ("herring", "Atlantic cod"),
    ];
    println!("{:<24} {:>8} {:>8}", "pair", "lexical", "semantic");
    for (a, b) in pairs {
        let lexical = cosine(&lexical_vector(a), &lexical_vector(b));
        let semantic = cosine(&semantic_vector(a, &table), &semantic_vector(b, &table));
        println!(
            "{:<24} {lexical:>8.3} {semantic:>8.3}",
            format!("{a} / {b}")
        );
    }
    Ok(())
}
