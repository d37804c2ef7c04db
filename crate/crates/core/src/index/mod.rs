//! Persistent entity index.
//!
//! An index directory holds:
//!
//! - `manifest.json`: format version, counts, config hash, per-file SHA-256
//!   and a content hash over all of them;
//! - `records.jsonl`: one [`IndexRecord`] per line, sorted by IRI;
//! - `postings.json`: the inverted token and 3-gram index (see [`postings`]);
//! - `vectors.bin`: the vector store (see [`store`]);
//! - optional attachments copied in at build time (for example the config).
//!
//! Opening checks the format version and that the vector store generation
//! matches the manifest; mismatching indexes are refused.

pub mod postings;
pub mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edges::LinkCounts;
use crate::error::{Error, Result};
use crate::expand::Neighborhood;
use crate::kb::{EntityText, Iri, KnowledgeBase, ParentDirection, ParentProperty};
use crate::vectors::{Encoders, LexicalVector, SemanticVector};

use postings::Postings;
pub use store::{VectorHandle, VectorKind, VectorStore};

pub const INDEX_FORMAT_VERSION: u32 = 1;

const MANIFEST_FILE: &str = "manifest.json";
const RECORDS_FILE: &str = "records.jsonl";
const POSTINGS_FILE: &str = "postings.json";
const VECTORS_FILE: &str = "vectors.bin";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextVectorHandles {
    pub lexical: VectorHandle,
    pub semantic: VectorHandle,
}

/// One linkable entity with its cached precomputations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub uri: Iri,
    pub texts: Vec<EntityText>,
    pub related_entities: Vec<Iri>,
    pub related_entities_weights: Vec<f64>,
    pub parent_entities: Vec<Iri>,
    pub parent_entities_weights: Vec<f64>,
    pub vector_handles: Vec<TextVectorHandles>,
}

impl IndexRecord {
    /// Text of the highest-weighted field (ties: field name, then text); the IRI's local name otherwise.
    pub fn label(&self) -> String {
        self.texts
            .iter()
            .min_by(|a, b| {
                b.weight
                    .total_cmp(&a.weight)
                    .then_with(|| a.field.cmp(&b.field))
                    .then_with(|| a.text.cmp(&b.text))
            })
            .map(|t| t.text.clone())
            .unwrap_or_else(|| self.uri.local_name().to_string())
    }

    pub fn neighborhood(&self) -> impl Iterator<Item = (&Iri, f64)> {
        self.related_entities
            .iter()
            .zip(self.related_entities_weights.iter().copied())
    }

    pub fn parents(&self) -> impl Iterator<Item = (&Iri, f64)> {
        self.parent_entities
            .iter()
            .zip(self.parent_entities_weights.iter().copied())
    }

    fn check(&self) -> Result<()> {
        let ok = self.related_entities.len() == self.related_entities_weights.len()
            && self.parent_entities.len() == self.parent_entities_weights.len()
            && self.texts.len() == self.vector_handles.len()
            && self.related_entities.first() == Some(&self.uri)
            && self.related_entities_weights.first() == Some(&0.0)
            && self
                .related_entities_weights
                .windows(2)
                .all(|w| w[0] <= w[1]);
        if ok {
            Ok(())
        } else {
            Err(Error::Integrity(format!(
                "record {} is inconsistent",
                self.uri
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParentParams {
    pub alpha: f64,
}

impl Default for ParentParams {
    fn default() -> Self {
        ParentParams { alpha: 0.3 }
    }
}

impl ParentParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(Error::Config("parent alpha must lie in (0, 1)".into()))
        }
    }
}

/// One-hop parents of `entity` along the registry's parent properties,
/// each weighted `l(parent)^(-alpha)`, sorted by IRI.
pub fn compute_parents(
    kb: &KnowledgeBase,
    entity: &Iri,
    params: &ParentParams,
    links: &LinkCounts,
) -> Vec<(Iri, f64)> {
    let mut parents: BTreeSet<Iri> = BTreeSet::new();
    for ParentProperty {
        predicate,
        direction,
    } in kb.registry().parent_properties()
    {
        match direction {
            ParentDirection::Forward => {
                for t in kb.triples_of(entity) {
                    if &t.predicate == predicate {
                        if let Some(o) = t.object.as_iri() {
                            parents.insert(o.clone());
                        }
                    }
                }
            }
            ParentDirection::Inverse => {
                for t in kb.triples() {
                    if &t.predicate == predicate && t.object.as_iri() == Some(entity) {
                        parents.insert(t.subject.clone());
                    }
                }
            }
        }
    }
    parents.remove(entity);
    weigh_parents(parents, params, links)
}

fn weigh_parents(
    parents: BTreeSet<Iri>,
    params: &ParentParams,
    links: &LinkCounts,
) -> Vec<(Iri, f64)> {
    parents
        .into_iter()
        .map(|q| {
            let l = links.get(&q).max(1) as f64;
            (q, l.powf(-params.alpha))
        })
        .collect()
}

/// [`compute_parents`] for many entities, with one pass over the triples.
pub fn compute_all_parents(
    kb: &KnowledgeBase,
    entities: &[Iri],
    params: &ParentParams,
    links: &LinkCounts,
) -> BTreeMap<Iri, Vec<(Iri, f64)>> {
    let wanted: BTreeSet<&Iri> = entities.iter().collect();
    let mut found: BTreeMap<&Iri, BTreeSet<Iri>> = BTreeMap::new();
    let props = kb.registry().parent_properties();
    for t in kb.triples() {
        let Some(o) = t.object.as_iri() else { continue };
        for prop in props.iter().filter(|p| p.predicate == t.predicate) {
            let (child, parent) = match prop.direction {
                ParentDirection::Forward => (&t.subject, o),
                ParentDirection::Inverse => (o, &t.subject),
            };
            if child != parent {
                if let Some(c) = wanted.get(child) {
                    found.entry(*c).or_default().insert(parent.clone());
                }
            }
        }
    }
    entities
        .iter()
        .map(|e| {
            let parents = found.remove(e).unwrap_or_default();
            (e.clone(), weigh_parents(parents, params, links))
        })
        .collect()
}

/// Build-time summary written to `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub record_count: usize,
    pub text_count: usize,
    pub vector_count: usize,
    pub token_terms: usize,
    pub trigram_terms: usize,
    pub semantic_dimension: usize,
    pub ngram_sizes: Vec<usize>,
    pub config_hash: String,
    pub vector_generation: String,
    pub files: BTreeMap<String, String>,
    pub content_hash: String,
}

/// Everything the index is built from.
pub struct IndexInputs<'a> {
    pub kb: &'a KnowledgeBase,
    pub neighborhoods: &'a BTreeMap<Iri, Neighborhood>,
    pub parents: &'a BTreeMap<Iri, Vec<(Iri, f64)>>,
    pub encoders: &'a Encoders,
    pub config_hash: String,
    /// Extra files copied verbatim into the index directory.
    pub attachments: Vec<(String, Vec<u8>)>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes a complete index for every entity that has at least one text field.
pub fn build_index(inputs: &IndexInputs<'_>, out_dir: &Path) -> Result<IndexManifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entities = inputs.kb.linkable_entities();
    if entities.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Index("duplicate entity URI in index build".into()));
    }

    struct Prepared {
        uri: Iri,
        texts: Vec<EntityText>,
        vectors: Vec<(LexicalVector, SemanticVector)>,
    }
    let prepared: Vec<Prepared> = entities
        .par_iter()
        .map(|uri| {
            let texts = inputs.kb.entity_texts(uri);
            let vectors = texts
                .iter()
                .map(|t| {
                    (
                        inputs.encoders.lexical.encode(&t.text),
                        inputs.encoders.semantic.encode(&t.text),
                    )
                })
                .collect();
            Prepared {
                uri: uri.clone(),
                texts,
                vectors,
            }
        })
        .collect();

    let vectors_path = out_dir.join(VECTORS_FILE);
    let mut writer = store::StoreWriter::create(&vectors_path)?;
    let mut offsets: Vec<Vec<(u64, u64)>> = Vec::with_capacity(prepared.len());
    for p in &prepared {
        let mut per = Vec::with_capacity(p.vectors.len());
        for (lex, sem) in &p.vectors {
            per.push((writer.append_lexical(lex)?, writer.append_semantic(sem)?));
        }
        offsets.push(per);
    }
    let (generation, vector_count) = writer.finish()?;

    let mut postings = Postings::default();
    let mut records = Vec::with_capacity(prepared.len());
    let mut text_count = 0;
    for (i, (p, offs)) in prepared.into_iter().zip(offsets).enumerate() {
        for (j, t) in p.texts.iter().enumerate() {
            postings.add_text(i as u32, j as u32, &t.text);
        }
        text_count += p.texts.len();
        let (related_entities, related_entities_weights) = match inputs.neighborhoods.get(&p.uri) {
            Some(n) => n.neighbors.iter().cloned().unzip(),
            None => (vec![p.uri.clone()], vec![0.0]),
        };
        let (parent_entities, parent_entities_weights) = inputs
            .parents
            .get(&p.uri)
            .map(|ps| ps.iter().cloned().unzip())
            .unwrap_or_default();
        let vector_handles = offs
            .into_iter()
            .map(|(l, s)| TextVectorHandles {
                lexical: VectorHandle {
                    offset: l,
                    kind: VectorKind::Lexical,
                    generation,
                },
                semantic: VectorHandle {
                    offset: s,
                    kind: VectorKind::Semantic,
                    generation,
                },
            })
            .collect();
        let record = IndexRecord {
            uri: p.uri,
            texts: p.texts,
            related_entities,
            related_entities_weights,
            parent_entities,
            parent_entities_weights,
            vector_handles,
        };
        record.check()?;
        records.push(record);
    }

    let records_path = out_dir.join(RECORDS_FILE);
    {
        let file = File::create(&records_path).map_err(|e| Error::io(&records_path, e))?;
        let mut w = BufWriter::new(file);
        for r in &records {
            serde_json::to_writer(&mut w, r)
                .map_err(|e| Error::Index(format!("serializing record: {e}")))?;
            w.write_all(b"\n")
                .map_err(|e| Error::io(&records_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&records_path, e))?;
    }
    let postings_path = out_dir.join(POSTINGS_FILE);
    let bytes = serde_json::to_vec(&postings)
        .map_err(|e| Error::Index(format!("serializing postings: {e}")))?;
    fs::write(&postings_path, bytes).map_err(|e| Error::io(&postings_path, e))?;

    let mut files = BTreeMap::new();
    for (name, bytes) in &inputs.attachments {
        if [MANIFEST_FILE, RECORDS_FILE, POSTINGS_FILE, VECTORS_FILE].contains(&name.as_str())
            || name.contains(['/', '\\'])
        {
            return Err(Error::Index(format!("invalid attachment name {name:?}")));
        }
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        files.insert(name.clone(), hex::encode(Sha256::digest(bytes)));
    }
    for name in [RECORDS_FILE, POSTINGS_FILE, VECTORS_FILE] {
        files.insert(name.to_string(), sha256_file(&out_dir.join(name))?);
    }
    let mut content = Sha256::new();
    for (name, digest) in &files {
        content.update(name.as_bytes());
        content.update(b"\0");
        content.update(digest.as_bytes());
        content.update(b"\n");
    }
    content.update(inputs.config_hash.as_bytes());

    let manifest = IndexManifest {
        format_version: INDEX_FORMAT_VERSION,
        record_count: records.len(),
        text_count,
        vector_count,
        token_terms: postings.tokens.term_count(),
        trigram_terms: postings.trigrams.term_count(),
        semantic_dimension: inputs.encoders.semantic.dimension(),
        ngram_sizes: inputs.encoders.lexical.sizes().to_vec(),
        config_hash: inputs.config_hash.clone(),
        vector_generation: format!("{generation:016x}"),
        files,
        content_hash: hex::encode(content.finalize()),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Index(format!("serializing manifest: {e}")))?;
    bytes.push(b'\n');
    fs::write(&manifest_path, bytes).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// A retrieved candidate.
#[derive(Clone, Copy, Debug)]
pub struct CandidateHit<'a> {
    pub record: &'a IndexRecord,
    pub retrieval_score: f64,
}

/// An opened, read-only index. Shareable across threads.
pub struct Index {
    dir: PathBuf,
    manifest: IndexManifest,
    records: Vec<IndexRecord>,
    by_uri: HashMap<Iri, usize>,
    postings: Postings,
    store: VectorStore,
}

impl std::fmt::Debug for Index {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Index")
            .field("dir", &self.dir)
            .field("records", &self.records.len())
            .finish()
    }
}

impl Index {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: IndexManifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Index(format!("corrupt manifest: {e}")))?;
        if manifest.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::Index(format!(
                "index format version {} is not supported (expected {INDEX_FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let store = VectorStore::open(&dir.join(VECTORS_FILE))?;
        if format!("{:016x}", store.generation()) != manifest.vector_generation {
            return Err(Error::Integrity(
                "vector store generation does not match the manifest".into(),
            ));
        }

        let records_path = dir.join(RECORDS_FILE);
        let file = File::open(&records_path).map_err(|e| Error::io(&records_path, e))?;
        let mut records = Vec::with_capacity(manifest.record_count);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&records_path, e))?;
            let record: IndexRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Index(format!("record line {}: {e}", i + 1)))?;
            record.check()?;
            records.push(record);
        }
        if records.len() != manifest.record_count {
            return Err(Error::Integrity(format!(
                "manifest lists {} records, found {}",
                manifest.record_count,
                records.len()
            )));
        }
        let by_uri: HashMap<Iri, usize> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.uri.clone(), i))
            .collect();
        if by_uri.len() != records.len() {
            return Err(Error::Integrity("duplicate record URI".into()));
        }

        let postings_path = dir.join(POSTINGS_FILE);
        let bytes = fs::read(&postings_path).map_err(|e| Error::io(&postings_path, e))?;
        let postings: Postings = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Index(format!("corrupt postings: {e}")))?;
        Ok(Index {
            dir: dir.to_owned(),
            manifest,
            records,
            by_uri,
            postings,
            store,
        })
    }

    /// Recomputes every file digest and compares with the manifest.
    pub fn verify(&self) -> Result<()> {
        for (name, digest) in &self.manifest.files {
            if &sha256_file(&self.dir.join(name))? != digest {
                return Err(Error::Integrity(format!(
                    "{name} does not match the manifest"
                )));
            }
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &IndexManifest {
        &self.manifest
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn record(&self, uri: &Iri) -> Option<&IndexRecord> {
        self.by_uri.get(uri).map(|&i| &self.records[i])
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    /// Top-`k` entities for a mention by field-weighted retrieval score, ties by IRI.
    pub fn query_candidates(&self, mention_text: &str, k: usize) -> Vec<CandidateHit<'_>> {
        if k == 0 || crate::vectors::normalize_text(mention_text).is_empty() {
            return Vec::new();
        }
        // record -> field -> best text score
        let mut per_record: BTreeMap<u32, BTreeMap<&str, f64>> = BTreeMap::new();
        for ((rec, txt), score) in self.postings.score_texts(mention_text) {
            let text = &self.records[rec as usize].texts[txt as usize];
            let best = per_record
                .entry(rec)
                .or_default()
                .entry(text.field.as_str())
                .or_insert(0.0);
            if score > *best {
                *best = score;
            }
        }
        let mut hits: Vec<(u32, f64)> = per_record
            .into_iter()
            .map(|(rec, fields)| {
                let r = &self.records[rec as usize];
                let total = fields
                    .iter()
                    .map(|(field, s)| field_weight(r, field) * s)
                    .sum();
                (rec, total)
            })
            .filter(|(_, s)| *s > 0.0)
            .collect();
        // records are stored in IRI order, so index order breaks ties by IRI
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        hits.into_iter()
            .map(|(rec, retrieval_score)| CandidateHit {
                record: &self.records[rec as usize],
                retrieval_score,
            })
            .collect()
    }

    /// Reads vectors for a batch of handles, preserving order.
    pub fn load_vectors(
        &self,
        handles: &[TextVectorHandles],
    ) -> Result<(Vec<LexicalVector>, Vec<SemanticVector>)> {
        let mut lexical = Vec::with_capacity(handles.len());
        let mut semantic = Vec::with_capacity(handles.len());
        for h in handles {
            lexical.push(self.store.lexical(h.lexical)?);
            semantic.push(self.store.semantic(h.semantic)?);
        }
        Ok((lexical, semantic))
    }
}

fn field_weight(record: &IndexRecord, field: &str) -> f64 {
    record
        .texts
        .iter()
        .find(|t| t.field == field)
        .map_or(0.0, |t| t.weight)
}
