//! In-memory knowledge base: triples, property semantics and the two
//! generic cleaning passes (cross-reference normalization and pruning).

mod ntriples;
mod registry;

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ntriples::{parse_line, ParsedLine};
pub use registry::{
    CrossRefRules, ParentDirection, ParentProperty, PropertyRegistry, RegistrySpec, TextField,
    TextFieldSpec, WeightSpec,
};

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if is_absolute_iri(&value) {
            Ok(Iri(value))
        } else {
            Err(Error::InvalidIri(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Trailing segment after the last `/`, `#` or `:`; used as a fallback label.
    pub fn local_name(&self) -> &str {
        let s = self.0.as_str();
        match s.rfind(['/', '#']) {
            Some(i) if i + 1 < s.len() => &s[i + 1..],
            _ => s,
        }
    }
}

fn is_absolute_iri(s: &str) -> bool {
    let Some(colon) = s.find(':') else {
        return false;
    };
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
    first_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && colon + 1 < s.len()
        && !s.chars().any(|c| {
            c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
        })
}

impl TryFrom<String> for Iri {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> String {
        iri.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub text: String,
    pub lang: Option<String>,
}

impl Literal {
    /// Untagged or `en` / `en-*` tagged.
    pub fn is_english(&self) -> bool {
        match &self.lang {
            None => true,
            Some(tag) => {
                let tag = tag.to_ascii_lowercase();
                tag == "en" || tag.starts_with("en-")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// How malformed lines are handled while loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub triples: usize,
    pub duplicates: usize,
    pub skipped_malformed: usize,
    pub dropped_non_english: usize,
    pub distinct_entities: usize,
    pub literals: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossRefReport {
    pub resolved: usize,
    pub unresolved: usize,
}

/// One text-field value of an entity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityText {
    pub field: String,
    pub text: String,
    pub weight: f64,
}

/// Deduplicated triples sorted by (subject, predicate, object), plus the
/// registry describing what each predicate means.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeBase {
    triples: Vec<Triple>,
    registry: PropertyRegistry,
}

impl KnowledgeBase {
    /// Builds a knowledge base, returning it with the number of duplicates dropped.
    pub fn from_triples(
        triples: impl IntoIterator<Item = Triple>,
        registry: PropertyRegistry,
    ) -> (Self, usize) {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        let before = triples.len();
        triples.sort_unstable();
        triples.dedup();
        let dups = before - triples.len();
        (KnowledgeBase { triples, registry }, dups)
    }

    pub fn empty(registry: PropertyRegistry) -> Self {
        KnowledgeBase {
            triples: Vec::new(),
            registry,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn registry(&self) -> &PropertyRegistry {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Distinct IRIs in subject or object position.
    pub fn entities(&self) -> BTreeSet<&Iri> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(&t.subject);
            if let Term::Iri(o) = &t.object {
                out.insert(o);
            }
        }
        out
    }

    pub fn literal_count(&self) -> usize {
        self.triples
            .iter()
            .filter(|t| matches!(t.object, Term::Literal(_)))
            .count()
    }

    /// All triples with the given subject (contiguous thanks to the sort order).
    pub fn triples_of(&self, subject: &Iri) -> &[Triple] {
        let start = self.triples.partition_point(|t| &t.subject < subject);
        let end = start + self.triples[start..].partition_point(|t| &t.subject == subject);
        &self.triples[start..end]
    }

    /// Registered text fields of `entity`, ordered by field name then text.
    pub fn entity_texts(&self, entity: &Iri) -> Vec<EntityText> {
        let mut out: Vec<EntityText> = self
            .triples_of(entity)
            .iter()
            .filter_map(|t| {
                let lit = t.object.as_literal()?;
                let field = self.registry.text_field(&t.predicate)?;
                Some(EntityText {
                    field: field.name.clone(),
                    text: lit.text.clone(),
                    weight: field.weight,
                })
            })
            .collect();
        out.sort_by(|a, b| a.field.cmp(&b.field).then_with(|| a.text.cmp(&b.text)));
        out.dedup_by(|a, b| a.field == b.field && a.text == b.text);
        out
    }

    /// Entities that have at least one registered text field, in IRI order.
    pub fn linkable_entities(&self) -> Vec<Iri> {
        let mut out: Vec<Iri> = Vec::new();
        for t in &self.triples {
            if t.object.as_literal().is_some()
                && self.registry.text_field(&t.predicate).is_some()
                && out.last() != Some(&t.subject)
            {
                out.push(t.subject.clone());
            }
        }
        out
    }

    /// Replaces reference literals such as `"XDB:123"` under the configured
    /// reference predicates with close-match triples pointing at the resolved IRI.
    pub fn normalize_cross_refs(self) -> (Self, CrossRefReport) {
        let rules = self.registry.cross_refs().clone();
        let Some(emit) = rules.emit_predicate.clone() else {
            return (self, CrossRefReport::default());
        };
        let mut report = CrossRefReport::default();
        let mut out = Vec::with_capacity(self.triples.len());
        for t in self.triples {
            let resolved = match (&t.object, rules.reference_predicates.contains(&t.predicate)) {
                (Term::Literal(lit), true) => match rules.resolve(&lit.text) {
                    Some(iri) => Some(iri),
                    None => {
                        report.unresolved += 1;
                        None
                    }
                },
                _ => None,
            };
            match resolved {
                Some(iri) => {
                    report.resolved += 1;
                    out.push(Triple::new(t.subject, emit.clone(), Term::Iri(iri)));
                }
                None => out.push(t),
            }
        }
        let (kb, _) = KnowledgeBase::from_triples(out, self.registry);
        (kb, report)
    }

    /// Drops every triple whose predicate is listed for pruning; returns the removal count.
    pub fn prune_triples(mut self) -> (Self, usize) {
        let before = self.triples.len();
        let prune = self.registry.prune_predicates();
        if !prune.is_empty() {
            self.triples.retain(|t| !prune.contains(&t.predicate));
        }
        let removed = before - self.triples.len();
        (self, removed)
    }
}

/// Reads a line-oriented triple file.
pub fn load_triples(
    path: &Path,
    registry: PropertyRegistry,
    mode: ParseMode,
) -> Result<(KnowledgeBase, LoadReport)> {
    load_many(&[path], registry, mode)
}

/// Reads several triple files into one knowledge base.
pub fn load_many<P: AsRef<Path>>(
    paths: &[P],
    registry: PropertyRegistry,
    mode: ParseMode,
) -> Result<(KnowledgeBase, LoadReport)> {
    let mut report = LoadReport::default();
    let mut triples = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_triples(BufReader::new(file), mode, &mut triples, &mut report).map_err(
            |e| match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            },
        )?;
    }
    let (kb, dups) = KnowledgeBase::from_triples(triples, registry);
    report.duplicates = dups;
    report.triples = kb.len();
    report.distinct_entities = kb.entities().len();
    report.literals = kb.literal_count();
    Ok((kb, report))
}

fn read_triples<R: BufRead>(
    reader: R,
    mode: ParseMode,
    out: &mut Vec<Triple>,
    report: &mut LoadReport,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        report.lines += 1;
        match parse_line(&line) {
            Ok(ParsedLine::Empty) => {}
            Ok(ParsedLine::Triple(t)) => match &t.object {
                Term::Literal(lit) if !lit.is_english() => report.dropped_non_english += 1,
                _ => out.push(t),
            },
            Err(message) => match mode {
                ParseMode::Strict => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message,
                    })
                }
                ParseMode::Lenient => report.skipped_malformed += 1,
            },
        }
    }
    Ok(())
}

/// Parses triples from an in-memory string; handy for fixtures.
pub fn parse_triples(text: &str, mode: ParseMode) -> Result<(Vec<Triple>, LoadReport)> {
    let mut out = Vec::new();
    let mut report = LoadReport::default();
    read_triples(text.as_bytes(), mode, &mut out, &mut report)?;
    Ok((out, report))
}
