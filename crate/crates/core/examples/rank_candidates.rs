//! Scores index candidates for one mention against its surface and sentence.

use std::path::Path;

use ontotopics::mentions::{Mention, MentionSource};
use ontotopics::ranking::{activation, MentionVectors, Ranker, RankingParams};
use ontotopics::{build_index_from_config, Config, Index};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let dir = tempfile::tempdir()?;
    build_index_from_config(&config, &dir.path().join("index"))?;
    let index = Index::open(&dir.path().join("index"))?;
    let encoders = config.encoders()?;

    for x in [0.0, 0.3, 0.5, 0.7, 1.0] {
        println!("activation({x}) = {:.6}", activation(x, 4.0, 8.0));
    }

    let ranker = Ranker::new(RankingParams::default())?;
    for sentence in [
        "The seal failed and the pump leaked through the gasket.",
        "A seal rested on the sea ice next to a walrus.",
    ] {
        let mention = Mention {
            surface: "seal".into(),
            lemma: "seal".into(),
            sentence: sentence.into(),
            source: MentionSource::Text,
            char_span: None,
        };
        let vectors = MentionVectors::encode(&mention, &encoders);
        let hits = index.query_candidates(&mention.surface, config.retrieval.k);
        let ranked = ranker.rank_candidates(&index, 0, &vectors, &hits)?;
        println!("{sentence}");
        for c in ranked.iter().take(3) {
            println!("  {:<12} {:.3}", c.entity.local_name(), c.score);
        }
    }
    Ok(())
}
