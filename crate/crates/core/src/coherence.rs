//! Document-global coherence boosts.
//!
//! The highest-ranked candidates of every mention form a sparse similarity
//! graph: two candidates are linked when their cached neighborhoods share an
//! entity, with `dist(a, b) = min_x dist_a(x) + dist_b(x)` over shared entries
//! and similarity `1 / (1 + dist)`. Weakly connected candidates are removed
//! greedily and the survivors receive boosts `1 + gamma · conn / max_conn`,
//! where `conn` only counts candidates of other mentions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::Iri;
use crate::ranking::{sort_candidates, ScoredCandidate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceParams {
    pub enabled: bool,
    pub top_m_per_mention: usize,
    pub min_keep: usize,
    pub gamma: f64,
    pub prune_fraction: f64,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        CoherenceParams {
            enabled: true,
            top_m_per_mention: 3,
            min_keep: 1,
            gamma: 0.25,
            prune_fraction: 0.5,
        }
    }
}

impl CoherenceParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_m_per_mention == 0 || self.min_keep == 0 {
            return Err(Error::Config(
                "top_m_per_mention and min_keep must be >= 1".into(),
            ));
        }
        if self.min_keep > self.top_m_per_mention {
            return Err(Error::Config(
                "min_keep must not exceed top_m_per_mention".into(),
            ));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config("gamma must be a nonnegative number".into()));
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(Error::Config("prune_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Sparse symmetric similarity graph over candidate entities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoherenceGraph {
    nodes: Vec<Iri>,
    /// Upper-triangle entries keyed by node indices `(i, j)` with `i < j`.
    edges: BTreeMap<(usize, usize), f64>,
}

impl CoherenceGraph {
    pub fn nodes(&self) -> &[Iri] {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn position(&self, e: &Iri) -> Option<usize> {
        self.nodes.binary_search(e).ok()
    }

    pub fn similarity(&self, a: &Iri, b: &Iri) -> Option<f64> {
        let (i, j) = (self.position(a)?, self.position(b)?);
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.get(&key).copied()
    }

    /// `(a, b, similarity)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&Iri, &Iri, f64)> {
        self.edges
            .iter()
            .map(|(&(i, j), &s)| (&self.nodes[i], &self.nodes[j], s))
    }
}

/// Pair distance through shared neighborhood entries, if any.
pub fn pair_distance(a: &[(Iri, f64)], b: &[(Iri, f64)]) -> Option<f64> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let lookup: HashMap<&Iri, f64> = large.iter().map(|(e, d)| (e, *d)).collect();
    small
        .iter()
        .filter_map(|(e, d)| lookup.get(e).map(|d2| d + d2))
        .min_by(|x, y| x.total_cmp(y))
}

/// Returns an entity's `(neighbor, distance)` pairs, if it has any.
pub type NeighborhoodLookup<'a> = dyn Fn(&Iri) -> Option<Vec<(Iri, f64)>> + 'a;

/// Builds the similarity graph for `candidates`, given each one's neighborhood
/// as `(entity, distance)` pairs. Candidates without a neighborhood have no edges.
pub fn build_similarity(
    candidates: &BTreeSet<Iri>,
    neighborhoods: &NeighborhoodLookup<'_>,
) -> CoherenceGraph {
    let nodes: Vec<Iri> = candidates.iter().cloned().collect();
    let hoods: Vec<Vec<(Iri, f64)>> = nodes
        .iter()
        .map(|n| neighborhoods(n).unwrap_or_default())
        .collect();
    let mut edges = BTreeMap::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if let Some(d) = pair_distance(&hoods[i], &hoods[j]) {
                edges.insert((i, j), 1.0 / (1.0 + d));
            }
        }
    }
    CoherenceGraph { nodes, edges }
}

/// Greedy removal of weakly connected candidates followed by boost assignment.
///
/// `membership` lists, per mention, the candidate entities considered for it.
/// Edges between two candidates of the same mention are ignored. Every
/// graph node gets a boost; removed or unconnected nodes get exactly 1.
pub fn greedy_prune(
    graph: &CoherenceGraph,
    membership: &[Vec<Iri>],
    params: &CoherenceParams,
) -> BTreeMap<Iri, f64> {
    let n = graph.nodes.len();
    let mentions_of: Vec<Vec<usize>> = {
        let mut m = vec![Vec::new(); n];
        for (mi, list) in membership.iter().enumerate() {
            let unique: BTreeSet<usize> = list.iter().filter_map(|e| graph.position(e)).collect();
            for i in unique {
                m[i].push(mi);
            }
        }
        m
    };
    // candidates competing for the same mention do not support each other
    let rivals = |i: usize, j: usize| mentions_of[i].iter().any(|m| mentions_of[j].contains(m));
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &s) in &graph.edges {
        if !rivals(i, j) {
            adjacency[i].push((j, s));
            adjacency[j].push((i, s));
        }
    }
    let mut remaining_per_mention: Vec<usize> = membership
        .iter()
        .map(|l| l.iter().collect::<BTreeSet<_>>().len())
        .collect();

    let mut active = vec![true; n];
    let mut conn: Vec<f64> = adjacency
        .iter()
        .map(|adj| adj.iter().map(|(_, s)| s).sum())
        .collect();
    let target = (params.prune_fraction * n as f64).floor() as usize;
    let mut removed = 0;
    while removed < target {
        // weakest removable node; nodes are in IRI order so index breaks ties
        let pick = (0..n)
            .filter(|&i| active[i])
            .filter(|&i| {
                mentions_of[i]
                    .iter()
                    .all(|&m| remaining_per_mention[m] > params.min_keep)
            })
            .min_by(|&a, &b| conn[a].total_cmp(&conn[b]).then(a.cmp(&b)));
        let Some(i) = pick else { break };
        active[i] = false;
        removed += 1;
        for &m in &mentions_of[i] {
            remaining_per_mention[m] -= 1;
        }
        for &(j, s) in &adjacency[i] {
            conn[j] -= s;
        }
    }

    // recompute exactly over survivors to avoid drift from subtraction
    let final_conn: Vec<f64> = (0..n)
        .map(|i| {
            if !active[i] {
                return 0.0;
            }
            adjacency[i]
                .iter()
                .filter(|(j, _)| active[*j])
                .map(|(_, s)| s)
                .sum()
        })
        .collect();
    let max_conn = final_conn.iter().copied().fold(0.0, f64::max);
    graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let boost = if max_conn > 0.0 {
                1.0 + params.gamma * final_conn[i] / max_conn
            } else {
                1.0
            };
            (e.clone(), boost)
        })
        .collect()
}

/// Sets boosts on every candidate (1 where absent) and re-sorts each list.
pub fn apply_boosts(ranked: &mut [Vec<ScoredCandidate>], boosts: &BTreeMap<Iri, f64>) {
    for list in ranked.iter_mut() {
        for c in list.iter_mut() {
            c.boost = boosts.get(&c.entity).copied().unwrap_or(1.0);
        }
        sort_candidates(list);
    }
}

/// Runs pre-selection, graph construction, pruning and boosting for one document.
pub fn apply_coherence(
    ranked: &mut [Vec<ScoredCandidate>],
    neighborhoods: &NeighborhoodLookup<'_>,
    params: &CoherenceParams,
) {
    if !params.enabled {
        for list in ranked.iter_mut() {
            for c in list.iter_mut() {
                c.boost = 1.0;
            }
            sort_candidates(list);
        }
        return;
    }
    let membership: Vec<Vec<Iri>> = ranked
        .iter()
        .map(|list| {
            list.iter()
                .take(params.top_m_per_mention)
                .map(|c| c.entity.clone())
                .collect()
        })
        .collect();
    let candidates: BTreeSet<Iri> = membership.iter().flatten().cloned().collect();
    let graph = build_similarity(&candidates, neighborhoods);
    let boosts = greedy_prune(&graph, &membership, params);
    apply_boosts(ranked, &boosts);
}
