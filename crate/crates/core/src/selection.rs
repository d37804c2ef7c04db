//! Topic aggregation, parent enhancement and knee-point cutoff.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::Iri;
use crate::mentions::Mention;
use crate::ranking::ScoredCandidate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionParams {
    pub lambda_diversity: f64,
    pub kneedle_sensitivity: f64,
    pub min_topics: usize,
    pub include_parents: bool,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            lambda_diversity: 0.2,
            kneedle_sensitivity: 1.0,
            min_topics: 3,
            include_parents: true,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_diversity >= 0.0) || !self.lambda_diversity.is_finite() {
            return Err(Error::Config(
                "lambda_diversity must be a nonnegative number".into(),
            ));
        }
        if !(self.kneedle_sensitivity > 0.0) || !self.kneedle_sensitivity.is_finite() {
            return Err(Error::Config("kneedle_sensitivity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicOrigin {
    Direct,
    Parent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicResult {
    #[serde(rename = "uri")]
    pub entity: Iri,
    pub label: String,
    #[serde(rename = "score")]
    pub final_score: f64,
    #[serde(rename = "lemmas")]
    pub supporting_lemmas: BTreeSet<String>,
    pub origin: TopicOrigin,
    /// Direct topics this parent was derived from.
    #[serde(skip)]
    pub children: BTreeSet<Iri>,
}

/// Descending score, ties by IRI.
pub fn sort_topics(topics: &mut [TopicResult]) {
    topics.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.entity.cmp(&b.entity))
    });
}

/// Groups each mention's top candidate by entity.
///
/// `ranked[i]` must be sorted (post-coherence) and belong to `mentions[i]`.
/// `label` provides the display label for an entity.
pub fn aggregate(
    ranked: &[Vec<ScoredCandidate>],
    mentions: &[Mention],
    label: &dyn Fn(&Iri) -> String,
    params: &SelectionParams,
) -> Vec<TopicResult> {
    let mut groups: BTreeMap<&Iri, (f64, BTreeSet<String>)> = BTreeMap::new();
    for (i, list) in ranked.iter().enumerate() {
        let Some(top) = list.first() else { continue };
        let g = groups.entry(&top.entity).or_default();
        g.0 += top.effective_score();
        if let Some(m) = mentions.get(i) {
            g.1.insert(m.lemma.clone());
        }
    }
    let mut topics: Vec<TopicResult> = groups
        .into_iter()
        .map(|(entity, (sum, lemmas))| {
            let diversity = lemmas.len().saturating_sub(1) as f64;
            TopicResult {
                entity: entity.clone(),
                label: label(entity),
                final_score: sum * (1.0 + params.lambda_diversity * diversity),
                supporting_lemmas: lemmas,
                origin: TopicOrigin::Direct,
                children: BTreeSet::new(),
            }
        })
        .collect();
    sort_topics(&mut topics);
    topics
}

/// Adds parents of direct topics with score `w_q · child score`, accumulated.
pub fn enhance_with_parents(
    topics: Vec<TopicResult>,
    parents_of: &dyn Fn(&Iri) -> Vec<(Iri, f64)>,
    label: &dyn Fn(&Iri) -> String,
    params: &SelectionParams,
) -> Vec<TopicResult> {
    if !params.include_parents {
        return topics;
    }
    let mut by_entity: BTreeMap<Iri, TopicResult> = topics
        .iter()
        .map(|t| (t.entity.clone(), t.clone()))
        .collect();
    for t in topics.iter().filter(|t| t.origin == TopicOrigin::Direct) {
        for (q, w) in parents_of(&t.entity) {
            let entry = by_entity.entry(q.clone()).or_insert_with(|| TopicResult {
                entity: q.clone(),
                label: label(&q),
                final_score: 0.0,
                supporting_lemmas: BTreeSet::new(),
                origin: TopicOrigin::Parent,
                children: BTreeSet::new(),
            });
            entry.final_score += w * t.final_score;
            if entry.origin == TopicOrigin::Parent {
                entry
                    .supporting_lemmas
                    .extend(t.supporting_lemmas.iter().cloned());
                entry.children.insert(t.entity.clone());
            }
        }
    }
    let mut out: Vec<TopicResult> = by_entity.into_values().collect();
    sort_topics(&mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KneeKind {
    /// A plateau that drops off; the knee is the last plateau point.
    Concave,
    /// A steep head that flattens; the knee is the first flat point.
    Convex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Knee {
    pub index: usize,
    pub kind: KneeKind,
}

/// The knee of a descending score list, if a pronounced one exists.
///
/// The curve is normalized to the unit square and compared against the chord
/// from the first to the last point. The side of the chord holding more of
/// the curve is searched first, the other side only if that finds nothing.
/// The maximum difference counts as a knee only if the difference curve
/// later drops below `max − sensitivity / (n − 1)`.
pub fn detect_knee(scores: &[f64], sensitivity: f64) -> Option<Knee> {
    let n = scores.len();
    if n < 3 {
        return None;
    }
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return None;
    }
    let step = 1.0 / (n - 1) as f64;
    let diff: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| (s - lo) / range - (1.0 - i as f64 * step))
        .collect();
    let flipped: Vec<f64> = diff.iter().map(|d| -d).collect();
    let drop = sensitivity * step;
    let concave = |d: &[f64]| {
        knee_above(d, drop).map(|index| Knee {
            index,
            kind: KneeKind::Concave,
        })
    };
    let convex = |d: &[f64]| {
        knee_above(d, drop).map(|index| Knee {
            index,
            kind: KneeKind::Convex,
        })
    };
    if diff.iter().sum::<f64>() >= 0.0 {
        concave(&diff).or_else(|| convex(&flipped))
    } else {
        convex(&flipped).or_else(|| concave(&diff))
    }
}

/// Index of the knee, see [`detect_knee`].
pub fn find_knee(scores: &[f64], sensitivity: f64) -> Option<usize> {
    detect_knee(scores, sensitivity).map(|k| k.index)
}

fn knee_above(diff: &[f64], drop: f64) -> Option<usize> {
    let (knee, &dmax) = diff
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    if dmax <= 0.0 {
        return None;
    }
    diff[knee + 1..]
        .iter()
        .any(|&d| d < dmax - drop)
        .then_some(knee)
}

/// Number of leading items to keep: everything above the knee, never fewer
/// than `min_topics` (or the whole list if shorter), never zero.
pub fn kneedle_cutoff(scores: &[f64], params: &SelectionParams) -> usize {
    let n = scores.len();
    if n < 2 {
        return n;
    }
    let floor = params.min_topics.min(n);
    let keep = match detect_knee(scores, params.kneedle_sensitivity) {
        Some(Knee {
            index,
            kind: KneeKind::Concave,
        }) => index + 1,
        Some(Knee {
            index,
            kind: KneeKind::Convex,
        }) => index,
        None => 0,
    };
    keep.max(floor).max(1)
}

/// Applies the knee cut and drops parents whose children were all cut.
pub fn cut_topics(mut topics: Vec<TopicResult>, params: &SelectionParams) -> Vec<TopicResult> {
    let scores: Vec<f64> = topics.iter().map(|t| t.final_score).collect();
    topics.truncate(kneedle_cutoff(&scores, params));
    let kept_direct: BTreeSet<Iri> = topics
        .iter()
        .filter(|t| t.origin == TopicOrigin::Direct)
        .map(|t| t.entity.clone())
        .collect();
    topics.retain(|t| {
        t.origin == TopicOrigin::Direct || t.children.iter().any(|c| kept_direct.contains(c))
    });
    topics
}
