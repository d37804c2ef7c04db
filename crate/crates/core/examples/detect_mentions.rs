//! Finds noun-run mentions with their lemmas and sentences.

use ontotopics::mentions::{merge_keywords, Document, MentionDetector, NounRunChunker};

fn main() {
    let doc = Document {
        id: "demo".into(),
        title: "Mercury in Atlantic cod".into(),
        abstract_text: "We measured heavy metals, e.g. mercury and cadmium, in cod livers. \
                        Concentrations were highest near Greenland."
            .into(),
        keywords: vec!["bioaccumulation".into()],
        mentions: None,
    };
    let text = doc.text();
    let mentions = merge_keywords(NounRunChunker::default().detect(&doc), &doc);
    for m in &mentions {
        let span = m
            .char_span
            .map_or("keyword".to_string(), |(s, e)| format!("{s}..{e}"));
        println!(
            "{:<16} lemma={:<14} {span:<10} in {:?}",
            m.surface, m.lemma, m.sentence
        );
        if let Some((s, e)) = m.char_span {
            assert_eq!(&text[s..e], m.surface);
        }
    }
}
