// Shared fixtures and independent reference implementations for the
// integration tests. Nothing here calls into the code under test except to
// construct inputs.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::path::{Path, PathBuf};

use ontotopics::config::Config;
use ontotopics::edges::{EdgeDirection, EdgeWeightParams, WeightedEdge};
use ontotopics::kb::{
    Iri, KnowledgeBase, Literal, ParseMode, RegistrySpec, Term, Triple, WeightSpec,
};
use ontotopics::pipeline::build_index_from_config;
use rand::Rng;

pub const ONTO: &str = "http://example.org/onto/";

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn reference_config_path() -> PathBuf {
    data_dir().join("reference.yaml")
}

pub fn corpus_path() -> PathBuf {
    data_dir().join("toy_corpus.jsonl")
}

pub fn toy_config() -> Config {
    Config::from_path(&reference_config_path()).expect("reference config loads")
}

pub fn onto(local: &str) -> Iri {
    Iri::new(format!("{ONTO}{local}")).unwrap()
}

/// Builds the toy index into `dir/index` and returns its path.
pub fn build_toy_index(dir: &Path) -> PathBuf {
    let out = dir.join("index");
    build_index_from_config(&toy_config(), &out).expect("toy index builds");
    out
}

/// Toy knowledge base after the same cleaning steps the index build runs.
pub fn cleaned_toy_kb() -> KnowledgeBase {
    let config = toy_config();
    let (kb, _) = ontotopics::kb::load_many(
        &config.kb.paths,
        config.registry().unwrap(),
        ParseMode::Lenient,
    )
    .unwrap();
    let (kb, _) = kb.normalize_cross_refs();
    kb.prune_triples().0
}

/// Expected topic IRIs per fixture document.
pub fn expected_topics() -> BTreeMap<String, BTreeSet<String>> {
    let text = std::fs::read_to_string(data_dir().join("toy_expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

// ---------------------------------------------------------------- random KBs

pub struct RandomKb {
    pub kb: KnowledgeBase,
    pub params: EdgeWeightParams,
}

fn rand_iri(prefix: &str, i: usize) -> Iri {
    Iri::new(format!("http://r/{prefix}{i}")).unwrap()
}

pub fn random_kb<R: Rng>(rng: &mut R, max_triples: usize) -> RandomKb {
    let n_entities = rng.gen_range(2..=30);
    let n_predicates = rng.gen_range(1..=6);
    let n_triples = rng.gen_range(1..=max_triples);
    let mut triples = Vec::with_capacity(n_triples);
    for _ in 0..n_triples {
        let s = rand_iri("e", rng.gen_range(0..n_entities));
        let p = rand_iri("p", rng.gen_range(0..n_predicates));
        let object = if rng.gen_bool(0.15) {
            Term::Literal(Literal {
                text: format!("text {}", rng.gen_range(0..50)),
                lang: None,
            })
        } else {
            Term::Iri(rand_iri("e", rng.gen_range(0..n_entities)))
        };
        triples.push(Triple::new(s, p, object));
    }
    let mut edge_base_weights = Vec::new();
    for i in 0..n_predicates {
        if rng.gen_bool(0.6) {
            edge_base_weights.push(WeightSpec {
                predicate: rand_iri("p", i),
                weight: rng.gen_range(0.1..4.0),
            });
        }
    }
    let spec = RegistrySpec {
        edge_base_weights,
        ..RegistrySpec::default()
    };
    let (kb, _) = KnowledgeBase::from_triples(triples, spec.build().unwrap());
    let params = EdgeWeightParams {
        f_l: rng.gen_range(0.0..1.5),
        f_g: rng.gen_range(0.0..1.5),
        c_max: rng.gen_range(1..=6),
        default_base_weight: rng.gen_range(0.1..4.0),
    };
    RandomKb { kb, params }
}

// ------------------------------------------------------------ edge oracle

/// (source, predicate, target, direction) -> weight, by direct evaluation of
/// the weight formula and a full sort of every group.
pub fn brute_force_edges(
    kb: &KnowledgeBase,
    params: &EdgeWeightParams,
) -> BTreeMap<(String, String, String, EdgeDirection), f64> {
    let triples = kb.triples();
    let links = |x: &Iri| -> f64 {
        triples.iter().filter(|t| &t.subject == x).count() as f64
            + triples
                .iter()
                .filter(|t| t.object.as_iri() == Some(x))
                .count() as f64
    };
    let mut candidates = Vec::new();
    for t in triples {
        if let Term::Iri(o) = &t.object {
            candidates.push((
                t.subject.clone(),
                t.predicate.clone(),
                o.clone(),
                EdgeDirection::Spo,
            ));
            candidates.push((
                o.clone(),
                t.predicate.clone(),
                t.subject.clone(),
                EdgeDirection::Ops,
            ));
        }
    }
    let mut groups: BTreeMap<(Iri, Iri, EdgeDirection), Vec<(f64, Iri)>> = BTreeMap::new();
    for (s, p, o, d) in &candidates {
        let g = match d {
            EdgeDirection::Spo => triples
                .iter()
                .filter(|t| &t.subject == s && &t.predicate == p && t.object.as_iri().is_some())
                .count(),
            EdgeDirection::Ops => triples
                .iter()
                .filter(|t| &t.predicate == p && t.object.as_iri() == Some(s))
                .count(),
        } as f64;
        let w_p = kb
            .registry()
            .edge_base_weight(p)
            .unwrap_or(params.default_base_weight);
        let w = w_p * links(o).powf(params.f_l) * g.powf(params.f_g);
        groups
            .entry((s.clone(), p.clone(), *d))
            .or_default()
            .push((w, o.clone()));
    }
    let mut out = BTreeMap::new();
    for ((s, p, d), mut members) in groups {
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for (w, o) in members.into_iter().take(params.c_max) {
            out.insert((s.to_string(), p.to_string(), o.to_string(), d), w);
        }
    }
    out
}

pub fn edge_map(edges: &[WeightedEdge]) -> BTreeMap<(String, String, String, EdgeDirection), f64> {
    edges
        .iter()
        .map(|e| {
            (
                (
                    e.edge.source.to_string(),
                    e.edge.predicate.to_string(),
                    e.edge.target.to_string(),
                    e.edge.direction,
                ),
                e.weight,
            )
        })
        .collect()
}

// ------------------------------------------------------- graph oracles

pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn node(i: usize) -> Iri {
    Iri::new(format!("http://g/n{i:03}")).unwrap()
}

pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Graph {
    let n = rng.gen_range(2..=max_nodes);
    let density = rng.gen_range(1.0..3.5);
    let m = (n as f64 * density) as usize;
    let edges = (0..m)
        .map(|_| {
            (
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0.05..2.0),
            )
        })
        .collect();
    Graph { n, edges }
}

impl Graph {
    pub fn weighted_edges(&self) -> Vec<WeightedEdge> {
        let p = Iri::new("http://g/p").unwrap();
        self.edges
            .iter()
            .map(|&(s, t, w)| WeightedEdge {
                edge: ontotopics::edges::DirectedEdge {
                    source: node(s),
                    predicate: p.clone(),
                    target: node(t),
                    direction: EdgeDirection::Spo,
                },
                weight: w,
            })
            .collect()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(s, t, w) in &self.edges {
            adj[s].push((t, w));
        }
        adj
    }

    /// Textbook Dijkstra, then entries beyond `max_distance` dropped.
    pub fn dijkstra(&self, seed: usize, max_distance: f64) -> BTreeMap<usize, f64> {
        let adj = self.adjacency();
        let mut dist = vec![f64::INFINITY; self.n];
        dist[seed] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrdF64(0.0), seed)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist.into_iter()
            .enumerate()
            .filter(|(_, d)| *d <= max_distance)
            .collect()
    }

    /// Minimum over every walk of at most `depth` edges, by exhaustive enumeration.
    pub fn enumerate(&self, seed: usize, depth: u32, max_distance: f64) -> BTreeMap<usize, f64> {
        fn walk(
            adj: &[Vec<(usize, f64)>],
            at: usize,
            dist: f64,
            left: u32,
            max: f64,
            best: &mut BTreeMap<usize, f64>,
        ) {
            let e = best.entry(at).or_insert(f64::INFINITY);
            if dist < *e {
                *e = dist;
            }
            if left == 0 {
                return;
            }
            for &(v, w) in &adj[at] {
                if dist + w <= max {
                    walk(adj, v, dist + w, left - 1, max, best);
                }
            }
        }
        let adj = self.adjacency();
        let mut best = BTreeMap::new();
        walk(&adj, seed, 0.0, depth, max_distance, &mut best);
        best
    }
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest distance between two entities when every edge may be walked in
/// both directions at its own cost.
pub fn undirected_distance(edges: &[WeightedEdge], a: &Iri, b: &Iri) -> Option<f64> {
    let mut ids: HashMap<&Iri, usize> = HashMap::new();
    for e in edges {
        let n = ids.len();
        ids.entry(&e.edge.source).or_insert(n);
        let n = ids.len();
        ids.entry(&e.edge.target).or_insert(n);
    }
    let (&sa, &sb) = (ids.get(a)?, ids.get(b)?);
    let graph = Graph {
        n: ids.len(),
        edges: edges
            .iter()
            .flat_map(|e| {
                let (s, t) = (ids[&e.edge.source], ids[&e.edge.target]);
                [(s, t, e.weight), (t, s, e.weight)]
            })
            .collect(),
    };
    graph.dijkstra(sa, f64::INFINITY).get(&sb).copied()
}

// ------------------------------------------------------- knee oracle

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curve {
    /// Flat head, steep tail.
    Concave,
    /// Steep head, flat tail.
    Convex,
}

/// Offline Kneedle for a decreasing curve of known shape: the curve is
/// mapped onto the increasing concave case, the difference curve is scanned
/// for local maxima, and a local maximum is a knee once the difference
/// falls below its threshold before the next local maximum. Among knees,
/// the one with the largest difference is reported, as an index into the
/// original (descending) score list.
pub fn reference_kneedle(scores: &[f64], curve: Curve, sensitivity: f64) -> Option<usize> {
    let n = scores.len();
    if n < 3 {
        return None;
    }
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return None;
    }
    let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let y: Vec<f64> = scores.iter().map(|s| (s - lo) / (hi - lo)).collect();
    // canonical increasing-concave coordinates, with the original index of each point
    let (xs, ys, orig): (Vec<f64>, Vec<f64>, Vec<usize>) = match curve {
        Curve::Concave => {
            let idx: Vec<usize> = (0..n).rev().collect();
            (
                idx.iter().map(|&i| 1.0 - x[i]).collect(),
                idx.iter().map(|&i| y[i]).collect(),
                idx,
            )
        }
        Curve::Convex => (
            x.clone(),
            y.iter().map(|v| 1.0 - v).collect(),
            (0..n).collect(),
        ),
    };
    let diff: Vec<f64> = ys.iter().zip(&xs).map(|(y, x)| y - x).collect();
    let mean_step: f64 = xs.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (n - 1) as f64;
    let maxima: Vec<usize> = (1..n - 1)
        .filter(|&i| diff[i] >= diff[i - 1] && diff[i] > diff[i + 1])
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (k, &m) in maxima.iter().enumerate() {
        let threshold = diff[m] - sensitivity * mean_step;
        let end = maxima.get(k + 1).copied().unwrap_or(n);
        if (m + 1..end).any(|j| diff[j] < threshold) && best.is_none_or(|(d, _)| diff[m] > d) {
            best = Some((diff[m], m));
        }
    }
    best.map(|(_, m)| orig[m])
}

/// Two-slope descending curve of `n` points with a slope change at `knee`
/// and uniform noise of at most `noise` of the range, sorted descending.
pub fn planted_curve<R: Rng>(
    rng: &mut R,
    curve: Curve,
    n: usize,
    knee: usize,
    noise: f64,
) -> Vec<f64> {
    let ratio = rng.gen_range(5.0..15.0);
    let (head, tail) = match curve {
        Curve::Concave => (1.0, ratio),
        Curve::Convex => (ratio, 1.0),
    };
    let mut v = Vec::with_capacity(n);
    let mut y = 100.0;
    for i in 0..n {
        v.push(y);
        y -= if i < knee { head } else { tail };
    }
    let range = v[0] - v[n - 1];
    for s in &mut v {
        *s += rng.gen_range(-noise..=noise) * range;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

// ------------------------------------------------------ synthetic corpus

/// Abstracts assembled from toy ontology labels and filler words, without
/// gold mentions.
pub fn synthetic_corpus<R: Rng>(rng: &mut R, docs: usize) -> String {
    const TERMS: &[&str] = &[
        "polar bear",
        "sea ice",
        "Arctic Ocean",
        "walrus",
        "seal",
        "herring",
        "Atlantic cod",
        "salmon",
        "krill",
        "orca",
        "mercury",
        "cadmium",
        "heavy metal",
        "microplastic",
        "polyethylene",
        "fish oil",
        "omega-3 fatty acid",
        "cheese",
        "yogurt",
        "bread",
        "fermentation",
        "lactic acid bacteria",
        "pump",
        "valve",
        "gasket",
        "pressure vessel",
        "Greenland",
        "Norway",
        "dairy product",
        "whale",
    ];
    const FILLER: &[&str] = &[
        "We report",
        "This study examines",
        "Results indicate",
        "Samples show",
        "Our analysis of",
        "Field data on",
        "A survey of",
    ];
    let mut out = String::new();
    for d in 0..docs {
        let sentences: Vec<String> = (0..rng.gen_range(3..6))
            .map(|_| {
                let a = TERMS[rng.gen_range(0..TERMS.len())];
                let b = TERMS[rng.gen_range(0..TERMS.len())];
                let f = FILLER[rng.gen_range(0..FILLER.len())];
                format!("{f} {a} and {b} across several sites.")
            })
            .collect();
        let doc = serde_json::json!({
            "id": format!("s{d:03}"),
            "title": format!("Notes on {}", TERMS[rng.gen_range(0..TERMS.len())]),
            "abstract": sentences.join(" "),
        });
        out.push_str(&doc.to_string());
        out.push('\n');
    }
    out
}

/// Runs the command-line entry point, returning (code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["ontotopics"];
    full.extend_from_slice(args);
    let code = ontotopics::app::main_with_args(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
