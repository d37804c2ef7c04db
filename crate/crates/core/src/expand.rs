//! Bounded weighted neighborhoods.
//!
//! The traversal is a uniform-cost search over `(node, hops)` labels. A
//! label is dropped when the node already holds a label with no more hops
//! and no larger distance, so the first time a node is popped its distance
//! is the minimum over all paths of at most `max_depth` edges.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edges::WeightedEdge;
use crate::error::{Error, Result};
use crate::kb::Iri;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionParams {
    pub max_depth: u32,
    pub max_distance: f64,
    /// Hard cap on neighborhood size (seed included); `None` disables it.
    pub max_neighbors: Option<usize>,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams {
            max_depth: 3,
            max_distance: 4.0,
            max_neighbors: Some(512),
        }
    }
}

impl ExpansionParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if !(self.max_distance > 0.0) {
            return Err(Error::Config("max_distance must be > 0".into()));
        }
        if self.max_neighbors == Some(0) {
            return Err(Error::Config("max_neighbors must be >= 1".into()));
        }
        Ok(())
    }
}

/// Entities around a seed, ascending by distance then IRI; the seed comes first at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub seed: Iri,
    pub neighbors: Vec<(Iri, f64)>,
}

impl Neighborhood {
    pub fn distance_to(&self, entity: &Iri) -> Option<f64> {
        self.neighbors
            .iter()
            .find(|(e, _)| e == entity)
            .map(|(_, d)| *d)
    }
}

/// Adjacency view of a weighted edge set.
#[derive(Clone, Debug, Default)]
pub struct EdgeGraph {
    ids: HashMap<Iri, u32>,
    names: Vec<Iri>,
    adjacency: Vec<Vec<(u32, f64)>>,
}

impl EdgeGraph {
    pub fn from_edges(edges: &[WeightedEdge]) -> Self {
        let mut graph = EdgeGraph::default();
        for e in edges {
            let s = graph.intern(&e.edge.source);
            let t = graph.intern(&e.edge.target);
            graph.adjacency[s as usize].push((t, e.weight));
        }
        // parallel edges: only the cheapest matters
        for adj in &mut graph.adjacency {
            adj.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            adj.dedup_by_key(|(t, _)| *t);
        }
        graph
    }

    fn intern(&mut self, iri: &Iri) -> u32 {
        if let Some(id) = self.ids.get(iri) {
            return *id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(iri.clone(), id);
        self.names.push(iri.clone());
        self.adjacency.push(Vec::new());
        id
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn expand(&self, seed: &Iri, params: &ExpansionParams) -> Neighborhood {
        let Some(&start) = self.ids.get(seed) else {
            return Neighborhood {
                seed: seed.clone(),
                neighbors: vec![(seed.clone(), 0.0)],
            };
        };
        let mut labels: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        let mut settled: HashMap<u32, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Label {
            distance: 0.0,
            hops: 0,
            node: start,
        });
        labels.insert(start, vec![(0, 0.0)]);
        while let Some(Label {
            distance,
            hops,
            node,
        }) = heap.pop()
        {
            settled.entry(node).or_insert(distance);
            if hops >= params.max_depth {
                continue;
            }
            for &(next, w) in &self.adjacency[node as usize] {
                let nd = distance + w;
                let nh = hops + 1;
                if nd > params.max_distance {
                    continue;
                }
                let front = labels.entry(next).or_default();
                if front.iter().any(|&(h, d)| h <= nh && d <= nd) {
                    continue;
                }
                front.retain(|&(h, d)| !(nh <= h && nd <= d));
                front.push((nh, nd));
                heap.push(Label {
                    distance: nd,
                    hops: nh,
                    node: next,
                });
            }
        }
        let mut neighbors: Vec<(Iri, f64)> = settled
            .into_iter()
            .map(|(id, d)| (self.names[id as usize].clone(), d))
            .collect();
        neighbors.sort_by(|a, b| {
            // seed always first
            (a.0 != *seed)
                .cmp(&(b.0 != *seed))
                .then(a.1.total_cmp(&b.1))
                .then_with(|| a.0.cmp(&b.0))
        });
        if let Some(cap) = params.max_neighbors {
            neighbors.truncate(cap);
        }
        Neighborhood {
            seed: seed.clone(),
            neighbors,
        }
    }

    /// Expands every entity in parallel, logging progress every `progress_every` seeds.
    pub fn expand_all(
        &self,
        entities: &[Iri],
        params: &ExpansionParams,
        progress_every: usize,
    ) -> BTreeMap<Iri, Neighborhood> {
        let done = AtomicUsize::new(0);
        let total = entities.len();
        entities
            .par_iter()
            .map(|e| {
                let n = self.expand(e, params);
                let count = done.fetch_add(1, AtomicOrdering::Relaxed) + 1;
                if progress_every > 0 && count.is_multiple_of(progress_every) {
                    log::info!("expanded {count}/{total} entities");
                }
                (e.clone(), n)
            })
            .collect()
    }
}

/// One-off expansion over an edge list.
pub fn expand(edges: &[WeightedEdge], seed: &Iri, params: &ExpansionParams) -> Neighborhood {
    EdgeGraph::from_edges(edges).expand(seed, params)
}

pub fn expand_all(
    edges: &[WeightedEdge],
    entities: &[Iri],
    params: &ExpansionParams,
) -> BTreeMap<Iri, Neighborhood> {
    EdgeGraph::from_edges(edges).expand_all(entities, params, 10_000)
}

#[derive(Debug, Clone, Copy)]
struct Label {
    distance: f64,
    hops: u32,
    node: u32,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // min-heap on (distance, hops, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .distance
            .total_cmp(&self.distance)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::{DirectedEdge, EdgeDirection};

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    fn edge(s: &str, t: &str, w: f64) -> WeightedEdge {
        WeightedEdge {
            edge: DirectedEdge {
                source: iri(s),
                predicate: iri("p"),
                target: iri(t),
                direction: EdgeDirection::Spo,
            },
            weight: w,
        }
    }

    fn chain() -> Vec<WeightedEdge> {
        vec![
            edge("A", "B", 0.5),
            edge("B", "C", 0.5),
            edge("C", "D", 0.5),
        ]
    }

    fn as_pairs(n: &Neighborhood) -> Vec<(String, f64)> {
        n.neighbors
            .iter()
            .map(|(e, d)| (e.local_name().to_string(), *d))
            .collect()
    }

    #[test]
    fn depth_limited_chain() {
        let params = ExpansionParams {
            max_depth: 2,
            max_distance: 10.0,
            max_neighbors: None,
        };
        let n = expand(&chain(), &iri("A"), &params);
        assert_eq!(
            as_pairs(&n),
            vec![("A".into(), 0.0), ("B".into(), 0.5), ("C".into(), 1.0)]
        );
    }

    #[test]
    fn distance_limited_chain() {
        let params = ExpansionParams {
            max_depth: 10,
            max_distance: 1.2,
            max_neighbors: None,
        };
        let n = expand(&chain(), &iri("A"), &params);
        assert_eq!(
            as_pairs(&n),
            vec![("A".into(), 0.0), ("B".into(), 0.5), ("C".into(), 1.0)]
        );
    }

    #[test]
    fn isolated_seed() {
        let n = expand(&chain(), &iri("Z"), &ExpansionParams::default());
        assert_eq!(as_pairs(&n), vec![("Z".into(), 0.0)]);
    }

    #[test]
    fn cheaper_longer_path_beyond_depth_is_not_used() {
        // A->D direct costs 3; A->B->C->D costs 0.3 but needs 3 hops
        let edges = vec![
            edge("A", "D", 3.0),
            edge("A", "B", 0.1),
            edge("B", "C", 0.1),
            edge("C", "D", 0.1),
        ];
        let p2 = ExpansionParams {
            max_depth: 2,
            max_distance: 10.0,
            max_neighbors: None,
        };
        assert_eq!(
            expand(&edges, &iri("A"), &p2).distance_to(&iri("D")),
            Some(3.0)
        );
        let p3 = ExpansionParams { max_depth: 3, ..p2 };
        let d = expand(&edges, &iri("A"), &p3)
            .distance_to(&iri("D"))
            .unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cap_keeps_closest() {
        let edges: Vec<_> = (0..10)
            .map(|i| edge("A", &format!("N{i}"), 0.1 * (i + 1) as f64))
            .collect();
        let params = ExpansionParams {
            max_neighbors: Some(4),
            ..Default::default()
        };
        let n = expand(&edges, &iri("A"), &params);
        let names: Vec<_> = as_pairs(&n).into_iter().map(|(e, _)| e).collect();
        assert_eq!(names, vec!["A", "N0", "N1", "N2"]);
    }

    #[test]
    fn expand_all_matches_single() {
        let mut edges = chain();
        edges.push(edge("X", "Y", 1.0));
        let entities = vec![iri("A"), iri("C"), iri("X"), iri("Q")];
        let params = ExpansionParams::default();
        let all = expand_all(&edges, &entities, &params);
        for e in &entities {
            assert_eq!(all[e], expand(&edges, e, &params));
        }
        // components stay separate
        assert!(all[&iri("X")].distance_to(&iri("A")).is_none());
        assert!(expand_all(&edges, &[], &params).is_empty());
    }
}
