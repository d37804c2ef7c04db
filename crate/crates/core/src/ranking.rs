//! Candidate scoring against a mention.
//!
//! For a candidate, every text of the candidate and of each indexed entity
//! in its neighborhood becomes one row. With lexical rows `L`, semantic rows
//! `S`, mention vectors `l`, `s_m` and sentence vector `s_c`, row `i`
//! contributes
//!
//! ```text
//! d_i = w_f,i · (w_l·a((L l)_i) + w_sm·a((S s_m)_i) + w_sc·a((S s_c)_i)) / (1 + w_e,i)
//! a(x) = (1 + exp(alpha − beta·x))^(-2)
//! ```
//!
//! where `w_f,i` is the row's text-field weight and `w_e,i` the distance of
//! the entity owning the row. The candidate score is `Σ d_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{CandidateHit, Index, IndexRecord};
use crate::kb::Iri;
use crate::mentions::Mention;
use crate::vectors::{Encoders, LexicalVector, SemanticVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankingParams {
    pub w_l: f64,
    pub w_sm: f64,
    pub w_sc: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lut_resolution: usize,
    pub use_lut: bool,
}

impl Default for RankingParams {
    fn default() -> Self {
        RankingParams {
            w_l: 1.0,
            w_sm: 1.0,
            w_sc: 0.5,
            alpha: 4.0,
            beta: 8.0,
            lut_resolution: 4096,
            use_lut: true,
        }
    }
}

impl RankingParams {
    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_l, self.w_sm, self.w_sc];
        if ws.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || ws.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(
                "ranking weights must be >= 0 with a positive sum".into(),
            ));
        }
        if !(self.beta > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config("beta must be > 0 and alpha finite".into()));
        }
        if self.lut_resolution < 2 {
            return Err(Error::Config("lut_resolution must be >= 2".into()));
        }
        Ok(())
    }
}

/// `(1 + exp(alpha − beta·x))^(-2)`.
pub fn activation(x: f64, alpha: f64, beta: f64) -> f64 {
    let e = (alpha - beta * x).exp();
    1.0 / ((1.0 + e) * (1.0 + e))
}

/// Activation with an optional lookup table over `[-1, 1]` (linear
/// interpolation; inputs outside the range use the exact formula).
#[derive(Clone, Debug)]
pub struct Activation {
    alpha: f64,
    beta: f64,
    table: Option<Vec<f64>>,
}

impl Activation {
    pub fn exact(alpha: f64, beta: f64) -> Self {
        Activation {
            alpha,
            beta,
            table: None,
        }
    }

    pub fn with_lut(alpha: f64, beta: f64, resolution: usize) -> Self {
        let resolution = resolution.max(2);
        let step = 2.0 / (resolution - 1) as f64;
        let table = (0..resolution)
            .map(|i| activation(-1.0 + i as f64 * step, alpha, beta))
            .collect();
        Activation {
            alpha,
            beta,
            table: Some(table),
        }
    }

    pub fn from_params(params: &RankingParams) -> Self {
        if params.use_lut {
            Activation::with_lut(params.alpha, params.beta, params.lut_resolution)
        } else {
            Activation::exact(params.alpha, params.beta)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.table {
            Some(t) if (-1.0..=1.0).contains(&x) => {
                let pos = (x + 1.0) * (t.len() - 1) as f64 / 2.0;
                let i = (pos.floor() as usize).min(t.len() - 2);
                let frac = pos - i as f64;
                t[i] + (t[i + 1] - t[i]) * frac
            }
            _ => activation(x, self.alpha, self.beta),
        }
    }
}

/// The three vectors describing a mention.
#[derive(Clone, Debug, PartialEq)]
pub struct MentionVectors {
    pub lexical: LexicalVector,
    pub semantic: SemanticVector,
    pub context: SemanticVector,
}

impl MentionVectors {
    pub fn encode(mention: &Mention, encoders: &Encoders) -> Self {
        MentionVectors {
            lexical: encoders.lexical.encode(&mention.surface),
            semantic: encoders.semantic.encode(&mention.surface),
            context: encoders.semantic.encode(&mention.sentence),
        }
    }
}

/// Row matrices for one candidate. Rows are unit length or zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateRows {
    pub field_weights: Vec<f64>,
    pub distances: Vec<f64>,
    pub lexical: Vec<LexicalVector>,
    /// Row-major `n × dimension`.
    pub semantic: Vec<f64>,
    pub dimension: usize,
}

impl CandidateRows {
    pub fn len(&self) -> usize {
        self.field_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field_weights.is_empty()
    }

    pub fn push(
        &mut self,
        field_weight: f64,
        distance: f64,
        lexical: LexicalVector,
        semantic: &SemanticVector,
    ) {
        if self.is_empty() {
            self.dimension = semantic.dimension();
        }
        debug_assert_eq!(self.dimension, semantic.dimension());
        self.field_weights.push(field_weight);
        self.distances.push(distance);
        self.lexical.push(lexical);
        self.semantic.extend_from_slice(semantic.values());
    }

    /// Rows for `record` and every indexed entity in its neighborhood.
    pub fn gather(index: &Index, record: &IndexRecord) -> Result<Self> {
        let mut rows = CandidateRows::default();
        for (entity, distance) in record.neighborhood() {
            let owner = if entity == &record.uri {
                Some(record)
            } else {
                index.record(entity)
            };
            let Some(owner) = owner else { continue };
            let (lex, sem) = index.load_vectors(&owner.vector_handles)?;
            for ((text, l), s) in owner.texts.iter().zip(lex).zip(&sem) {
                rows.push(text.weight, distance, l, s);
            }
        }
        Ok(rows)
    }

    fn semantic_row(&self, i: usize) -> &[f64] {
        &self.semantic[i * self.dimension..(i + 1) * self.dimension]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub entity: Iri,
    /// Index of the mention within the document's mention list.
    pub mention: usize,
    pub score: f64,
    pub boost: f64,
}

impl ScoredCandidate {
    pub fn effective_score(&self) -> f64 {
        self.score * self.boost
    }
}

/// Descending effective score, ties by IRI.
pub fn sort_candidates(list: &mut [ScoredCandidate]) {
    list.sort_by(|a, b| {
        b.effective_score()
            .total_cmp(&a.effective_score())
            .then_with(|| a.entity.cmp(&b.entity))
    });
}

#[derive(Clone, Debug)]
pub struct Ranker {
    params: RankingParams,
    activation: Activation,
}

impl Ranker {
    pub fn new(params: RankingParams) -> Result<Self> {
        params.validate()?;
        let activation = Activation::from_params(&params);
        Ok(Ranker { params, activation })
    }

    pub fn params(&self) -> &RankingParams {
        &self.params
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    /// Bulk form: the three similarity columns are computed as matrix-vector
    /// products first, then activated and combined.
    pub fn score_rows(&self, mention: &MentionVectors, rows: &CandidateRows) -> f64 {
        let n = rows.len();
        if n == 0 {
            return 0.0;
        }
        let lex: Vec<f64> = rows
            .lexical
            .iter()
            .map(|r| r.dot(&mention.lexical))
            .collect();
        let (mut sm, mut sc) = (vec![0.0; n], vec![0.0; n]);
        let (m, c) = (mention.semantic.values(), mention.context.values());
        if m.len() == rows.dimension && c.len() == rows.dimension {
            for i in 0..n {
                let row = rows.semantic_row(i);
                let (mut a, mut b) = (0.0, 0.0);
                for k in 0..rows.dimension {
                    a += row[k] * m[k];
                    b += row[k] * c[k];
                }
                sm[i] = a;
                sc[i] = b;
            }
        }
        let act = |v: &mut [f64]| v.iter_mut().for_each(|x| *x = self.activation.eval(*x));
        let mut lex = lex;
        act(&mut lex);
        act(&mut sm);
        act(&mut sc);
        let p = &self.params;
        (0..n)
            .map(|i| {
                rows.field_weights[i] * (p.w_l * lex[i] + p.w_sm * sm[i] + p.w_sc * sc[i])
                    / (1.0 + rows.distances[i])
            })
            .sum()
    }

    pub fn score_candidate(
        &self,
        index: &Index,
        mention_index: usize,
        mention: &MentionVectors,
        hit: &CandidateHit<'_>,
    ) -> Result<ScoredCandidate> {
        let rows = CandidateRows::gather(index, hit.record)?;
        Ok(ScoredCandidate {
            entity: hit.record.uri.clone(),
            mention: mention_index,
            score: self.score_rows(mention, &rows),
            boost: 1.0,
        })
    }

    /// Scores every hit, sorted descending by score, ties by IRI.
    pub fn rank_candidates(
        &self,
        index: &Index,
        mention_index: usize,
        mention: &MentionVectors,
        hits: &[CandidateHit<'_>],
    ) -> Result<Vec<ScoredCandidate>> {
        let mut out = hits
            .iter()
            .map(|h| self.score_candidate(index, mention_index, mention, h))
            .collect::<Result<Vec<_>>>()?;
        sort_candidates(&mut out);
        Ok(out)
    }
}
