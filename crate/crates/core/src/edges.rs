//! Traversal edge weights.
//!
//! Every IRI-object triple `(s, p, o)` yields two directed edges: `spo`
//! (s → o) and `ops` (o → s). An edge leaving `x` through `p` in direction
//! `d` towards `y` costs
//!
//! ```text
//! w = w_p · l(y)^f_l · g(x, p, d)^f_g
//! ```
//!
//! where `l` is the link count of the target and `g` the size of the
//! `(x, p, d)` group. Only the `c_max` cheapest edges of each group are kept.
//!
//! Large inputs go through a spill path: edge records are hash-partitioned
//! by source into at most [`MAX_PARTITIONS`] files, each partition is read
//! back, sorted by `(source, predicate, direction, target)` and grouped.
//! Spill records are little-endian:
//!
//! ```text
//! u32 len | source bytes | u32 len | predicate bytes | u32 len | target bytes
//! u8 direction (0 = spo, 1 = ops) | u64 l(target)
//! ```
//!
//! The spill directory is private, removed when the pipeline finishes, and
//! not a compatibility surface.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{Iri, KnowledgeBase, Term};

/// Upper bound on the number of spill partitions.
pub const MAX_PARTITIONS: usize = 256;

/// Smallest accepted memory budget in bytes.
pub const MIN_MEMORY_BUDGET: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDirection {
    Spo,
    Ops,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedEdge {
    pub source: Iri,
    pub predicate: Iri,
    pub target: Iri,
    pub direction: EdgeDirection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEdge {
    pub edge: DirectedEdge,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeWeightParams {
    pub f_l: f64,
    pub f_g: f64,
    pub c_max: usize,
    pub default_base_weight: f64,
}

impl Default for EdgeWeightParams {
    fn default() -> Self {
        EdgeWeightParams {
            f_l: 0.5,
            f_g: 0.5,
            c_max: 4,
            default_base_weight: 2.0,
        }
    }
}

impl EdgeWeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_l >= 0.0 && self.f_g >= 0.0 && self.f_l.is_finite() && self.f_g.is_finite()) {
            return Err(Error::Config("f_l and f_g must be finite and >= 0".into()));
        }
        if self.c_max < 1 {
            return Err(Error::Config("c_max must be >= 1".into()));
        }
        if !(self.default_base_weight > 0.0 && self.default_base_weight.is_finite()) {
            return Err(Error::Config("default_base_weight must be > 0".into()));
        }
        Ok(())
    }
}

/// `l(x)`: triples with `x` as subject (any object) plus triples with `x` as IRI object.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkCounts(HashMap<Iri, u64>);

impl LinkCounts {
    pub fn get(&self, entity: &Iri) -> u64 {
        self.0.get(entity).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn link_counts(kb: &KnowledgeBase) -> LinkCounts {
    let mut counts: HashMap<Iri, u64> = HashMap::new();
    for t in kb.triples() {
        *counts.entry(t.subject.clone()).or_default() += 1;
        if let Term::Iri(o) = &t.object {
            *counts.entry(o.clone()).or_default() += 1;
        }
    }
    LinkCounts(counts)
}

/// `g(s, p, d)`: number of IRI objects of `(s, p, ·)` for `spo`, number of
/// subjects of `(·, p, s)` for `ops`.
pub fn group_cardinality(kb: &KnowledgeBase, s: &Iri, p: &Iri, d: EdgeDirection) -> usize {
    match d {
        EdgeDirection::Spo => kb
            .triples_of(s)
            .iter()
            .filter(|t| &t.predicate == p && t.object.as_iri().is_some())
            .count(),
        EdgeDirection::Ops => kb
            .triples()
            .iter()
            .filter(|t| &t.predicate == p && t.object.as_iri() == Some(s))
            .count(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct EdgeRecord {
    source: String,
    predicate: String,
    direction: EdgeDirection,
    target: String,
    target_links: u64,
}

impl EdgeRecord {
    fn approx_size(&self) -> usize {
        self.source.len() + self.predicate.len() + self.target.len() + 24
    }

    fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for s in [&self.source, &self.predicate, &self.target] {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())?;
        }
        let d = match self.direction {
            EdgeDirection::Spo => 0u8,
            EdgeDirection::Ops => 1u8,
        };
        w.write_all(&[d])?;
        w.write_all(&self.target_links.to_le_bytes())
    }

    fn read_from<R: Read>(r: &mut R) -> std::io::Result<Option<Self>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let source = read_string(r, u32::from_le_bytes(len))?;
        r.read_exact(&mut len)?;
        let predicate = read_string(r, u32::from_le_bytes(len))?;
        r.read_exact(&mut len)?;
        let target = read_string(r, u32::from_le_bytes(len))?;
        let mut d = [0u8; 1];
        r.read_exact(&mut d)?;
        let direction = match d[0] {
            0 => EdgeDirection::Spo,
            1 => EdgeDirection::Ops,
            _ => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "bad direction byte",
                ))
            }
        };
        let mut links = [0u8; 8];
        r.read_exact(&mut links)?;
        Ok(Some(EdgeRecord {
            source,
            predicate,
            direction,
            target,
            target_links: u64::from_le_bytes(links),
        }))
    }
}

fn read_string<R: Read>(r: &mut R, len: u32) -> std::io::Result<String> {
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn edge_records<'a>(
    kb: &'a KnowledgeBase,
    links: &'a LinkCounts,
) -> impl Iterator<Item = EdgeRecord> + 'a {
    kb.triples()
        .iter()
        .flat_map(move |t| {
            let o = t.object.as_iri()?;
            Some([
                EdgeRecord {
                    source: t.subject.as_str().to_owned(),
                    predicate: t.predicate.as_str().to_owned(),
                    direction: EdgeDirection::Spo,
                    target: o.as_str().to_owned(),
                    target_links: links.get(o),
                },
                EdgeRecord {
                    source: o.as_str().to_owned(),
                    predicate: t.predicate.as_str().to_owned(),
                    direction: EdgeDirection::Ops,
                    target: t.subject.as_str().to_owned(),
                    target_links: links.get(&t.subject),
                },
            ])
        })
        .flatten()
}

struct Weigher<'a> {
    params: &'a EdgeWeightParams,
    kb: &'a KnowledgeBase,
    base_cache: HashMap<String, f64>,
}

impl Weigher<'_> {
    fn base_weight(&mut self, predicate: &str) -> f64 {
        if let Some(w) = self.base_cache.get(predicate) {
            return *w;
        }
        let w = Iri::new(predicate)
            .ok()
            .and_then(|p| self.kb.registry().edge_base_weight(&p))
            .unwrap_or(self.params.default_base_weight);
        self.base_cache.insert(predicate.to_owned(), w);
        w
    }

    /// Weighs one sorted `(source, predicate, direction)` group and keeps the cheapest edges.
    fn weigh_group(&mut self, group: &[EdgeRecord], out: &mut Vec<WeightedEdge>) -> Result<()> {
        let first = &group[0];
        let base = self.base_weight(&first.predicate);
        let g_term = (group.len() as f64).powf(self.params.f_g);
        let mut weighted: Vec<(f64, &EdgeRecord)> = group
            .iter()
            .map(|r| {
                (
                    base * (r.target_links as f64).powf(self.params.f_l) * g_term,
                    r,
                )
            })
            .collect();
        weighted.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| a.1.predicate.cmp(&b.1.predicate))
                .then_with(|| a.1.target.cmp(&b.1.target))
                .then_with(|| a.1.direction.cmp(&b.1.direction))
        });
        for (weight, r) in weighted.into_iter().take(self.params.c_max) {
            out.push(WeightedEdge {
                edge: DirectedEdge {
                    source: Iri::new(r.source.clone())?,
                    predicate: Iri::new(r.predicate.clone())?,
                    target: Iri::new(r.target.clone())?,
                    direction: r.direction,
                },
                weight,
            });
        }
        Ok(())
    }

    fn weigh_sorted(&mut self, records: &[EdgeRecord]) -> Result<Vec<WeightedEdge>> {
        let mut out = Vec::new();
        for group in records.chunk_by(|a, b| {
            a.source == b.source && a.predicate == b.predicate && a.direction == b.direction
        }) {
            self.weigh_group(group, &mut out)?;
        }
        Ok(out)
    }
}

/// Options for [`compute_edge_weights`].
#[derive(Clone, Debug)]
pub struct PipelineOptions<'a> {
    /// Approximate bytes of edge records held in memory at once.
    pub memory_budget: usize,
    /// Parent directory for spill files; the system temp dir when absent.
    pub spill_dir: Option<&'a Path>,
}

impl Default for PipelineOptions<'_> {
    fn default() -> Self {
        PipelineOptions {
            memory_budget: 256 * 1024 * 1024,
            spill_dir: None,
        }
    }
}

/// Computes weighted traversal edges, sorted by `(source, predicate, direction, target)`.
///
/// The result does not depend on the memory budget: the spill path and the
/// in-memory path weigh identical groups with identical arithmetic.
pub fn compute_edge_weights(
    kb: &KnowledgeBase,
    params: &EdgeWeightParams,
    options: &PipelineOptions<'_>,
) -> Result<Vec<WeightedEdge>> {
    params.validate()?;
    if options.memory_budget < MIN_MEMORY_BUDGET {
        return Err(Error::Config(format!(
            "memory budget {} is below the minimum of {MIN_MEMORY_BUDGET} bytes",
            options.memory_budget
        )));
    }
    let links = link_counts(kb);
    let estimated: usize = edge_records(kb, &links).map(|r| r.approx_size()).sum();
    let mut edges = if estimated <= options.memory_budget {
        let mut records: Vec<EdgeRecord> = edge_records(kb, &links).collect();
        records.sort_unstable();
        Weigher {
            params,
            kb,
            base_cache: HashMap::new(),
        }
        .weigh_sorted(&records)?
    } else {
        let partitions = estimated
            .div_ceil(options.memory_budget)
            .clamp(2, MAX_PARTITIONS);
        spill_and_weigh(kb, &links, params, options.spill_dir, partitions)?
    };
    edges.sort_by(|a, b| a.edge.cmp(&b.edge));
    Ok(edges)
}

fn partition_of(source: &str, partitions: usize) -> usize {
    (xxhash_rust::xxh3::xxh3_64(source.as_bytes()) % partitions as u64) as usize
}

fn spill_and_weigh(
    kb: &KnowledgeBase,
    links: &LinkCounts,
    params: &EdgeWeightParams,
    spill_dir: Option<&Path>,
    partitions: usize,
) -> Result<Vec<WeightedEdge>> {
    let dir = match spill_dir {
        Some(parent) => tempfile::Builder::new()
            .prefix("edge-spill-")
            .tempdir_in(parent)
            .map_err(|e| Error::io(parent, e))?,
        None => tempfile::Builder::new()
            .prefix("edge-spill-")
            .tempdir()
            .map_err(|e| Error::io(std::env::temp_dir(), e))?,
    };
    let paths: Vec<_> = (0..partitions)
        .map(|i| dir.path().join(format!("part-{i:03}.bin")))
        .collect();
    {
        let mut writers = paths
            .iter()
            .map(|p| {
                File::create(p)
                    .map(BufWriter::new)
                    .map_err(|e| Error::io(p, e))
            })
            .collect::<Result<Vec<_>>>()?;
        for record in edge_records(kb, links) {
            let i = partition_of(&record.source, partitions);
            record
                .write_to(&mut writers[i])
                .map_err(|e| Error::io(&paths[i], e))?;
        }
        for (w, p) in writers.iter_mut().zip(&paths) {
            w.flush().map_err(|e| Error::io(p, e))?;
        }
    }
    log::debug!("spilled edge records into {partitions} partitions");

    let per_partition: Vec<Vec<WeightedEdge>> = paths
        .par_iter()
        .map(|path| {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut reader = BufReader::new(file);
            let mut records = Vec::new();
            while let Some(r) =
                EdgeRecord::read_from(&mut reader).map_err(|e| Error::io(path, e))?
            {
                records.push(r);
            }
            records.sort_unstable();
            Weigher {
                params,
                kb,
                base_cache: HashMap::new(),
            }
            .weigh_sorted(&records)
        })
        .collect::<Result<_>>()?;
    dir.close()
        .map_err(|e| Error::Pipeline(format!("removing spill directory: {e}")))?;
    Ok(per_partition.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_triples, ParseMode, RegistrySpec, WeightSpec};

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    fn kb_with(lines: &[(&str, &str, &str)], weights: &[(&str, f64)]) -> KnowledgeBase {
        let text: String = lines
            .iter()
            .map(|(s, p, o)| {
                format!("<http://ex.org/{s}> <http://ex.org/{p}> <http://ex.org/{o}> .\n")
            })
            .collect();
        let (triples, _) = parse_triples(&text, ParseMode::Strict).unwrap();
        let reg = RegistrySpec {
            edge_base_weights: weights
                .iter()
                .map(|(p, w)| WeightSpec {
                    predicate: iri(p),
                    weight: *w,
                })
                .collect(),
            ..Default::default()
        }
        .build()
        .unwrap();
        KnowledgeBase::from_triples(triples, reg).0
    }

    #[test]
    fn link_count_chain() {
        let kb = kb_with(&[("A", "p", "B"), ("B", "q", "C")], &[]);
        let l = link_counts(&kb);
        assert_eq!(l.get(&iri("A")), 1);
        assert_eq!(l.get(&iri("B")), 2);
        assert_eq!(l.get(&iri("C")), 1);
        assert_eq!(l.get(&iri("Z")), 0);
    }

    #[test]
    fn literal_subjects_count_toward_links() {
        let (triples, _) = parse_triples(
            "<http://ex.org/A> <http://ex.org/label> \"a\" .\n<http://ex.org/A> <http://ex.org/p> <http://ex.org/B> .\n",
            ParseMode::Strict,
        )
        .unwrap();
        let kb = KnowledgeBase::from_triples(triples, RegistrySpec::default().build().unwrap()).0;
        let l = link_counts(&kb);
        assert_eq!(l.get(&iri("A")), 2);
        assert_eq!(l.get(&iri("B")), 1);
    }

    #[test]
    fn group_sizes() {
        let kb = kb_with(&[("A", "p", "B"), ("A", "p", "C")], &[]);
        assert_eq!(
            group_cardinality(&kb, &iri("A"), &iri("p"), EdgeDirection::Spo),
            2
        );
        assert_eq!(
            group_cardinality(&kb, &iri("B"), &iri("p"), EdgeDirection::Ops),
            1
        );
        let kb = kb_with(&[("A", "p", "B")], &[]);
        assert_eq!(
            group_cardinality(&kb, &iri("A"), &iri("p"), EdgeDirection::Spo),
            1
        );
    }

    #[test]
    fn hand_evaluated_weight() {
        let kb = kb_with(
            &[("A", "p", "B"), ("B", "q", "C")],
            &[("p", 1.0), ("q", 1.0)],
        );
        let edges = compute_edge_weights(
            &kb,
            &EdgeWeightParams::default(),
            &PipelineOptions::default(),
        )
        .unwrap();
        let e = edges
            .iter()
            .find(|e| e.edge.source == iri("A") && e.edge.direction == EdgeDirection::Spo)
            .unwrap();
        assert!((e.weight - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(edges.len(), 4);
    }

    #[test]
    fn zero_exponents_give_base_weight() {
        let kb = kb_with(
            &[
                ("A", "p", "B"),
                ("A", "p", "C"),
                ("C", "q", "B"),
                ("B", "r", "A"),
            ],
            &[("p", 0.1), ("q", 3.0)],
        );
        let params = EdgeWeightParams {
            f_l: 0.0,
            f_g: 0.0,
            ..Default::default()
        };
        for e in compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap() {
            let expected = match e.edge.predicate.local_name() {
                "p" => 0.1,
                "q" => 3.0,
                _ => 2.0,
            };
            assert_eq!(e.weight, expected);
        }
    }

    #[test]
    fn group_truncation_keeps_lowest() {
        // hub H with 10 p-edges to targets of varying degree
        let mut lines: Vec<(String, String, String)> = Vec::new();
        for i in 0..10 {
            lines.push(("H".into(), "p".into(), format!("T{i}")));
            for j in 0..i {
                lines.push((format!("T{i}"), "q".into(), format!("X{j}")));
            }
        }
        let refs: Vec<(&str, &str, &str)> = lines
            .iter()
            .map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str()))
            .collect();
        let kb = kb_with(&refs, &[]);
        let params = EdgeWeightParams::default();
        let edges = compute_edge_weights(&kb, &params, &PipelineOptions::default()).unwrap();
        let kept: Vec<_> = edges
            .iter()
            .filter(|e| e.edge.source == iri("H") && e.edge.direction == EdgeDirection::Spo)
            .collect();
        // oracle: weigh all ten, sort, keep four
        let l = link_counts(&kb);
        let mut all: Vec<(f64, Iri)> = (0..10)
            .map(|i| {
                let t = iri(&format!("T{i}"));
                (2.0 * (l.get(&t) as f64).sqrt() * 10f64.sqrt(), t)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        assert_eq!(kept.len(), 4);
        let mut kept_targets: Vec<_> = kept.iter().map(|e| e.edge.target.clone()).collect();
        kept_targets.sort();
        let mut oracle: Vec<_> = all.into_iter().take(4).map(|(_, t)| t).collect();
        oracle.sort();
        assert_eq!(kept_targets, oracle);
    }

    #[test]
    fn budget_below_minimum_rejected() {
        let kb = kb_with(&[("A", "p", "B")], &[]);
        let opts = PipelineOptions {
            memory_budget: 10,
            spill_dir: None,
        };
        assert!(matches!(
            compute_edge_weights(&kb, &EdgeWeightParams::default(), &opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unwritable_spill_dir_is_pipeline_io_error() {
        let lines: Vec<(String, String, String)> = (0..200)
            .map(|i| ("A".into(), "p".into(), format!("B{i}")))
            .collect();
        let refs: Vec<(&str, &str, &str)> = lines
            .iter()
            .map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str()))
            .collect();
        let kb = kb_with(&refs, &[]);
        let opts = PipelineOptions {
            memory_budget: MIN_MEMORY_BUDGET,
            spill_dir: Some(Path::new("/nonexistent/spill/dir")),
        };
        assert!(matches!(
            compute_edge_weights(&kb, &EdgeWeightParams::default(), &opts),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn spill_record_roundtrip() {
        let r = EdgeRecord {
            source: "http://a/é".into(),
            predicate: "http://a/p".into(),
            direction: EdgeDirection::Ops,
            target: "http://a/t".into(),
            target_links: 42,
        };
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        let mut slice = buf.as_slice();
        assert_eq!(EdgeRecord::read_from(&mut slice).unwrap(), Some(r));
        assert_eq!(EdgeRecord::read_from(&mut slice).unwrap(), None);
    }
}
