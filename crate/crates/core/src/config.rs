//! YAML configuration.
//!
//! Every section is optional and falls back to its defaults; unknown keys
//! are rejected. Relative paths are resolved against the directory of the
//! config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coherence::CoherenceParams;
use crate::edges::EdgeWeightParams;
use crate::error::{Error, Result};
use crate::expand::ExpansionParams;
use crate::index::ParentParams;
use crate::kb::{PropertyRegistry, RegistrySpec};
use crate::mentions::{MentionDetector, NounRunChunker, ProvidedMentions};
use crate::ranking::RankingParams;
use crate::selection::SelectionParams;
use crate::vectors::{EmbeddingTable, Encoders, LexicalEncoder, DEFAULT_NGRAM_SIZES};

/// The reference configuration for the bundled toy ontology; it spells out
/// every default.
pub const REFERENCE_CONFIG: &str = include_str!("../data/reference.yaml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KbConfig {
    pub paths: Vec<PathBuf>,
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub memory_budget: usize,
    pub spill_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            memory_budget: 256 * 1024 * 1024,
            spill_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    /// Word embedding file (`<vocab> <dim>` header, then `token v1 .. vd`).
    pub embeddings: PathBuf,
    pub ngram_sizes: Vec<usize>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            embeddings: PathBuf::from("embeddings.txt"),
            ngram_sizes: DEFAULT_NGRAM_SIZES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k: 30 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Rule-based chunking of title and abstract.
    #[default]
    NounRuns,
    /// Only the gold mentions supplied with each document.
    Provided,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
}

impl DetectorConfig {
    pub fn build(&self) -> Box<dyn MentionDetector> {
        match self.kind {
            DetectorKind::NounRuns => Box::new(NounRunChunker::default()),
            DetectorKind::Provided => Box::new(ProvidedMentions::new()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub kb: KbConfig,
    pub registry: RegistrySpec,
    pub edges: EdgeWeightParams,
    pub pipeline: PipelineConfig,
    pub expansion: ExpansionParams,
    pub encoders: EncoderConfig,
    pub parents: ParentParams,
    pub retrieval: RetrievalConfig,
    pub detector: DetectorConfig,
    pub ranking: RankingParams,
    pub coherence: CoherenceParams,
    pub selection: SelectionParams,
}

impl Config {
    pub fn from_yaml(text: &str) -> Result<Self> {
        let config: Config =
            serde_yaml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Config::from_yaml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn reference() -> Self {
        Config::from_yaml(REFERENCE_CONFIG).expect("bundled reference config is valid")
    }

    pub fn to_yaml(&self) -> Result<String> {
        serde_yaml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.kb.paths.iter_mut().for_each(fix);
        fix(&mut self.encoders.embeddings);
        if let Some(dir) = &mut self.pipeline.spill_dir {
            fix(dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.registry.build()?;
        self.edges.validate()?;
        if self.pipeline.memory_budget < crate::edges::MIN_MEMORY_BUDGET {
            return Err(Error::Config(format!(
                "pipeline.memory_budget must be at least {} bytes",
                crate::edges::MIN_MEMORY_BUDGET
            )));
        }
        self.expansion.validate()?;
        LexicalEncoder::new(self.encoders.ngram_sizes.clone())?;
        self.parents.validate()?;
        if self.retrieval.k == 0 {
            return Err(Error::Config("retrieval.k must be >= 1".into()));
        }
        self.ranking.validate()?;
        self.coherence.validate()?;
        self.selection.validate()
    }

    pub fn registry(&self) -> Result<PropertyRegistry> {
        self.registry.build()
    }

    /// Loads the embedding table and builds both encoders.
    pub fn encoders(&self) -> Result<Encoders> {
        let lexical = LexicalEncoder::new(self.encoders.ngram_sizes.clone())?;
        let table = EmbeddingTable::load(&self.encoders.embeddings)?;
        Ok(Encoders::mean_pool(lexical, table))
    }

    /// SHA-256 over the settings that shape the index (paths excluded).
    pub fn index_hash(&self) -> String {
        #[derive(Serialize)]
        struct Shape<'a> {
            registry: &'a RegistrySpec,
            edges: &'a EdgeWeightParams,
            expansion: &'a ExpansionParams,
            ngram_sizes: &'a [usize],
            parents: &'a ParentParams,
        }
        let shape = Shape {
            registry: &self.registry,
            edges: &self.edges,
            expansion: &self.expansion,
            ngram_sizes: &self.encoders.ngram_sizes,
            parents: &self.parents,
        };
        let bytes = serde_json::to_vec(&shape).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
