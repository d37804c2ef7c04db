//! Ontology-backed topic classification for scientific abstracts.
//!
//! An index is built once from an RDF knowledge base: triples are cleaned,
//! turned into weighted traversal edges, expanded into bounded
//! neighborhoods and stored alongside text vectors and parent links.
//! Documents are then classified by detecting mentions, retrieving
//! candidates, scoring them against the mention and its sentence,
//! rewarding candidates that are close to each other in the graph, and
//! cutting the aggregated topic list at its knee.
//!
//! The `examples/` directory walks through each stage:
//!
//! - `load_and_clean_kb`: parsing, cross-reference normalization, pruning
//! - `edge_weights` and `out_of_core_weights`: traversal costs
//! - `neighborhoods`: bounded weighted expansion
//! - `text_vectors`: lexical and semantic encoders
//! - `build_and_query_index`: persistent index and candidate retrieval
//! - `detect_mentions`: chunking and lemmas
//! - `rank_candidates`: per-mention scoring
//! - `coherence_boosts`: document-level disambiguation
//! - `kneedle_cutoff`: topic list truncation
//! - `classify_corpus`: the whole pipeline on the bundled toy data

// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod coherence;
pub mod config;
pub mod edges;
pub mod error;
pub mod expand;
pub mod index;
pub mod kb;
pub mod mentions;
pub mod pipeline;
pub mod ranking;
pub mod selection;
pub mod vectors;

pub use config::Config;
pub use error::{Error, Result};
pub use index::Index;
pub use kb::{Iri, KnowledgeBase};
pub use pipeline::{build_index_from_config, Classifier};
