//! Shows how graph proximity between candidates of different mentions boosts
//! the reading that fits the rest of the document.

use std::path::Path;

use ontotopics::mentions::Document;
use ontotopics::{build_index_from_config, Classifier, Config};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let config = Config::from_path(&data.join("reference.yaml"))?;
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("index");
    build_index_from_config(&config, &out)?;

    let doc: Document = serde_json::from_str(
        r#"{"id":"h","title":"Seals on shrinking sea ice",
            "abstract":"The seal and the walrus haul out on sea ice, where the polar bear hunts.",
            "mentions":["seal","sea ice","walrus","polar bear"]}"#,
    )?;

    let mut classifier = Classifier::open(&out, None)?;
    for enabled in [false, true] {
        classifier.set_coherence(enabled);
        let analysis = classifier.analyze(&doc)?;
        println!("coherence {}", if enabled { "on" } else { "off" });
        for c in analysis.ranked[0].iter().take(3) {
            println!(
                "  seal -> {:<12} score {:.3} boost {:.3} = {:.3}",
                c.entity.local_name(),
                c.score,
                c.boost,
                c.effective_score()
            );
        }
    }
    Ok(())
}
