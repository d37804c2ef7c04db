//! End-to-end workflows: building an index from a config, and classifying
//! documents against an opened index.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::coherence::{apply_coherence, CoherenceParams};
use crate::config::Config;
use crate::edges::{compute_edge_weights, link_counts, PipelineOptions};
use crate::error::{Error, Result};
use crate::expand::EdgeGraph;
use crate::index::{build_index, compute_all_parents, Index, IndexInputs, IndexManifest};
use crate::kb::{load_many, Iri, ParseMode};
use crate::mentions::{merge_keywords, Document, Mention, MentionDetector, ProvidedMentions};
use crate::ranking::{MentionVectors, Ranker, ScoredCandidate};
use crate::selection::{aggregate, cut_topics, enhance_with_parents, SelectionParams, TopicResult};
use crate::vectors::Encoders;

/// Config file name inside an index directory.
pub const INDEX_CONFIG_FILE: &str = "config.yaml";
/// Embedding file name inside an index directory.
pub const INDEX_EMBEDDINGS_FILE: &str = "embeddings.txt";

/// An error tagged with the build or classification stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    /// `(stage, elapsed, summary)` in execution order.
    pub stages: Vec<(&'static str, Duration, String)>,
    pub manifest: IndexManifest,
}

/// Runs load, cleaning, edge weighting, expansion, parents, vectors and
/// index writing. The effective config and the embedding file are copied
/// into the index so it can be classified against on its own.
pub fn build_index_from_config(config: &Config, out_dir: &Path) -> Result<BuildReport, StageError> {
    let mut stages = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, summary: String, stages: &mut Vec<_>| {
        let elapsed = clock.elapsed();
        log::info!("{name}: {summary} ({elapsed:.2?})");
        stages.push((name, elapsed, summary));
        clock = Instant::now();
    };

    config.validate().stage("config")?;
    let registry = config.registry().stage("config")?;
    let encoders = config.encoders().stage("encoders")?;
    let embedding_bytes = std::fs::read(&config.encoders.embeddings)
        .map_err(|e| Error::io(&config.encoders.embeddings, e))
        .stage("encoders")?;
    lap(
        "encoders",
        format!(
            "dimension {}, {} bytes",
            encoders.semantic.dimension(),
            embedding_bytes.len()
        ),
        &mut stages,
    );

    if config.kb.paths.is_empty() {
        return Err(Error::Config("no knowledge base files given".into())).stage("load");
    }
    let mode = if config.kb.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let (kb, report) = load_many(&config.kb.paths, registry, mode).stage("load")?;
    lap(
        "load",
        format!(
            "{} triples, {} entities, {} duplicates, {} malformed, {} non-English",
            report.triples,
            report.distinct_entities,
            report.duplicates,
            report.skipped_malformed,
            report.dropped_non_english
        ),
        &mut stages,
    );

    let (kb, xref) = kb.normalize_cross_refs();
    lap(
        "normalize",
        format!("{} resolved, {} unresolved", xref.resolved, xref.unresolved),
        &mut stages,
    );
    let (kb, pruned) = kb.prune_triples();
    lap(
        "prune",
        format!("{pruned} triples removed, {} left", kb.len()),
        &mut stages,
    );

    let options = PipelineOptions {
        memory_budget: config.pipeline.memory_budget,
        spill_dir: config.pipeline.spill_dir.as_deref(),
    };
    let edges = compute_edge_weights(&kb, &config.edges, &options).stage("edges")?;
    lap(
        "edges",
        format!("{} directed edges", edges.len()),
        &mut stages,
    );

    let entities = kb.linkable_entities();
    let graph = EdgeGraph::from_edges(&edges);
    let neighborhoods = graph.expand_all(&entities, &config.expansion, 10_000);
    let total: usize = neighborhoods.values().map(|n| n.neighbors.len()).sum();
    lap(
        "expand",
        format!("{} neighborhoods, {total} entries", neighborhoods.len()),
        &mut stages,
    );

    let links = link_counts(&kb);
    let parents = compute_all_parents(&kb, &entities, &config.parents, &links);
    let with_parents = parents.values().filter(|p| !p.is_empty()).count();
    lap(
        "parents",
        format!("{with_parents} entities with parents"),
        &mut stages,
    );

    let mut attached = config.clone();
    attached.kb.paths.clear();
    attached.pipeline.spill_dir = None;
    attached.encoders.embeddings = INDEX_EMBEDDINGS_FILE.into();
    let config_yaml = attached.to_yaml().stage("index")?;
    let inputs = IndexInputs {
        kb: &kb,
        neighborhoods: &neighborhoods,
        parents: &parents,
        encoders: &encoders,
        config_hash: config.index_hash(),
        attachments: vec![
            (INDEX_CONFIG_FILE.to_string(), config_yaml.into_bytes()),
            (INDEX_EMBEDDINGS_FILE.to_string(), embedding_bytes),
        ],
    };
    let manifest = build_index(&inputs, out_dir).stage("index")?;
    lap(
        "index",
        format!(
            "{} records, {} texts, {} vectors",
            manifest.record_count, manifest.text_count, manifest.vector_count
        ),
        &mut stages,
    );
    Ok(BuildReport { stages, manifest })
}

/// Intermediate results of one classification, for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub mentions: Vec<Mention>,
    /// Per mention, candidates sorted by effective score after coherence.
    pub ranked: Vec<Vec<ScoredCandidate>>,
    /// Direct and parent topics before the knee cut.
    pub uncut: Vec<TopicResult>,
    pub topics: Vec<TopicResult>,
}

pub struct Classifier {
    index: Index,
    encoders: Encoders,
    detector: Box<dyn MentionDetector>,
    gold: ProvidedMentions,
    ranker: Ranker,
    k: usize,
    coherence: CoherenceParams,
    selection: SelectionParams,
}

impl Classifier {
    pub fn new(index: Index, encoders: Encoders, config: &Config) -> Result<Self> {
        config.validate()?;
        Ok(Classifier {
            index,
            encoders,
            detector: config.detector.build(),
            gold: ProvidedMentions::new(),
            ranker: Ranker::new(config.ranking.clone())?,
            k: config.retrieval.k,
            coherence: config.coherence.clone(),
            selection: config.selection.clone(),
        })
    }

    /// Opens an index together with the config and embeddings stored in it.
    /// `config` replaces the stored config for the classification settings.
    pub fn open(index_dir: &Path, config: Option<&Config>) -> Result<Self> {
        let index = Index::open(index_dir)?;
        let stored = Config::from_path(&index_dir.join(INDEX_CONFIG_FILE))?;
        let mut effective = config.cloned().unwrap_or_else(|| stored.clone());
        if effective.index_hash() != index.manifest().config_hash {
            return Err(Error::Config(
                "config does not match the settings the index was built with".into(),
            ));
        }
        effective.encoders.embeddings = stored.encoders.embeddings.clone();
        let encoders = effective.encoders()?;
        Classifier::new(index, encoders, &effective)
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn encoders(&self) -> &Encoders {
        &self.encoders
    }

    pub fn set_coherence(&mut self, enabled: bool) {
        self.coherence.enabled = enabled;
    }

    /// Gold mentions when the document has them, otherwise the configured
    /// detector plus keywords.
    pub fn mentions(&self, doc: &Document) -> Vec<Mention> {
        if doc.mentions.is_some() {
            self.gold.detect(doc)
        } else {
            merge_keywords(self.detector.detect(doc), doc)
        }
    }

    fn label(&self, e: &Iri) -> String {
        self.index
            .record(e)
            .map_or_else(|| e.local_name().to_string(), |r| r.label())
    }

    pub fn analyze(&self, doc: &Document) -> Result<Analysis> {
        let mentions = self.mentions(doc);
        let mut ranked = Vec::with_capacity(mentions.len());
        for (i, m) in mentions.iter().enumerate() {
            let hits = self.index.query_candidates(&m.surface, self.k);
            let vectors = MentionVectors::encode(m, &self.encoders);
            ranked.push(
                self.ranker
                    .rank_candidates(&self.index, i, &vectors, &hits)?,
            );
        }
        let neighborhoods = |e: &Iri| {
            self.index
                .record(e)
                .map(|r| r.neighborhood().map(|(x, d)| (x.clone(), d)).collect())
        };
        apply_coherence(&mut ranked, &neighborhoods, &self.coherence);

        let label = |e: &Iri| self.label(e);
        let direct = aggregate(&ranked, &mentions, &label, &self.selection);
        let parents_of = |e: &Iri| {
            self.index
                .record(e)
                .map(|r| r.parents().map(|(q, w)| (q.clone(), w)).collect())
                .unwrap_or_default()
        };
        let uncut = enhance_with_parents(direct, &parents_of, &label, &self.selection);
        let topics = cut_topics(uncut.clone(), &self.selection);
        Ok(Analysis {
            mentions,
            ranked,
            uncut,
            topics,
        })
    }

    pub fn classify_document(&self, doc: &Document) -> Result<Vec<TopicResult>> {
        Ok(self.analyze(doc)?.topics)
    }
}
