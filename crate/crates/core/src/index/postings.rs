//! Inverted index over entity text fields.
//!
//! Every field value is a separate text. For a query with distinct terms
//! `Q`, a text `t` scores
//!
//! ```text
//! match(Q, t) = Σ_{q ∈ Q} sqrt(tf(q, t)) · idf(q)² / sqrt(len(t))
//! idf(q)      = 1 + ln(N / (df(q) + 1))
//! ```
//!
//! with `N` the number of texts and `len(t)` its term count. An entity
//! scores `Σ_f weight(f) · max_{t ∈ f} match(Q, t)`. Terms are word tokens;
//! when none of the query tokens occurs anywhere, the query falls back to
//! its character 3-grams matched against 3-gram postings.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::vectors::{char_ngrams, normalize_text, tokenize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TermKind {
    Token,
    Trigram,
}

/// Terms of a text under the given kind, with their counts.
pub(crate) fn text_terms(text: &str, kind: TermKind) -> Vec<(String, u32)> {
    match kind {
        TermKind::Token => {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokenize(text) {
                *counts.entry(t).or_default() += 1;
            }
            counts.into_iter().collect()
        }
        TermKind::Trigram => {
            let mut grams = char_ngrams(&normalize_text(text), &[3]);
            grams.sort();
            grams
        }
    }
}

pub(crate) fn idf(total_texts: usize, df: usize) -> f64 {
    1.0 + (total_texts as f64 / (df as f64 + 1.0)).ln()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct TermTable {
    /// term → [(text id, term frequency)]
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    /// text id → number of terms
    lengths: Vec<u32>,
}

impl TermTable {
    fn add_text(&mut self, id: u32, terms: &[(String, u32)]) {
        self.lengths.push(terms.iter().map(|(_, c)| *c).sum());
        for (term, tf) in terms {
            self.postings
                .entry(term.clone())
                .or_default()
                .push((id, *tf));
        }
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    fn contains_any(&self, terms: &[String]) -> bool {
        terms.iter().any(|t| self.postings.contains_key(t))
    }

    /// Per-text match scores for the distinct `terms`.
    fn score(&self, terms: &[String]) -> HashMap<u32, f64> {
        let n = self.lengths.len();
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = idf(n, list.len());
            for &(text, tf) in list {
                let len = self.lengths[text as usize].max(1) as f64;
                *acc.entry(text).or_default() += (tf as f64).sqrt() * idf * idf / len.sqrt();
            }
        }
        acc
    }
}

/// Where each text lives: `(record index, text index within the record)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct Postings {
    pub text_refs: Vec<(u32, u32)>,
    pub tokens: TermTable,
    pub trigrams: TermTable,
}

impl Postings {
    pub fn add_text(&mut self, record: u32, text_index: u32, text: &str) {
        let id = self.text_refs.len() as u32;
        self.text_refs.push((record, text_index));
        self.tokens.add_text(id, &text_terms(text, TermKind::Token));
        self.trigrams
            .add_text(id, &text_terms(text, TermKind::Trigram));
    }

    /// Text-level scores for a query, using trigram fallback when no token matches.
    pub fn score_texts(&self, query: &str) -> Vec<((u32, u32), f64)> {
        let tokens: Vec<String> = distinct(text_terms(query, TermKind::Token));
        let scores = if self.tokens.contains_any(&tokens) {
            self.tokens.score(&tokens)
        } else {
            let grams = distinct(text_terms(query, TermKind::Trigram));
            self.trigrams.score(&grams)
        };
        let mut out: Vec<((u32, u32), f64)> = scores
            .into_iter()
            .map(|(id, s)| (self.text_refs[id as usize], s))
            .collect();
        out.sort_by_key(|a| a.0);
        out
    }
}

fn distinct(terms: Vec<(String, u32)>) -> Vec<String> {
    terms.into_iter().map(|(t, _)| t).collect()
}
