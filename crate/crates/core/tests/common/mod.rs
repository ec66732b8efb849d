#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use ontoclust::{NodeKind, Ontology, Score, SimilarityReport, UserProfile, WeightedGraph};
use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use rand::Rng;

pub const SAMPLE_ONTOLOGY: &str = include_str!("../../../../docs/data/ontology.json");
pub const SAMPLE_REQUESTS: &str = include_str!("../../../../docs/data/requests.jsonl");

/// Brute-force fuzzy similarity: enumerate every proper substring of `a`,
/// keep the first start of each, then scan `b` from that start.
pub fn fuzzy_oracle(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    if a.len() == 1 {
        return if b.contains(&a[0]) { 1.0 } else { 0.0 };
    }
    let mut seen: Vec<(Vec<char>, usize)> = Vec::new();
    for i in 0..a.len() {
        for j in i + 1..=a.len() {
            if j - i < a.len() && !seen.iter().any(|(s, _)| s[..] == a[i..j]) {
                seen.push((a[i..j].to_vec(), i));
            }
        }
    }
    let mut found = 0;
    for (s, from) in &seen {
        let mut hit = false;
        for k in *from..b.len() {
            if k + s.len() <= b.len() && b[k..k + s.len()] == s[..] {
                hit = true;
            }
        }
        if hit {
            found += 1;
        }
    }
    found as f64 / seen.len() as f64
}

pub fn random_word<R: Rng>(rng: &mut R, alphabet: &[u8], len: usize) -> String {
    (0..len)
        .map(|_| *alphabet.choose(rng).unwrap() as char)
        .collect()
}

/// Random graph on `n` nodes, at least two of them users, arcs present with
/// probability `density` and weighted in [0.001, 1].
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> WeightedGraph {
    let mut g = WeightedGraph::new();
    for i in 0..n {
        let kind = if i < 2 || rng.gen_bool(0.4) {
            NodeKind::User
        } else if rng.gen_bool(0.5) {
            NodeKind::Class
        } else {
            NodeKind::Attribute
        };
        g.add_node(kind, &format!("n{i}"), None);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                let w = if rng.gen_bool(0.2) {
                    0.001
                } else {
                    rng.gen_range(0.001..=1.0)
                };
                g.add_arc(a, b, w);
            }
        }
    }
    g
}

/// Shortest distances from `source` by Dijkstra's algorithm.
pub fn dijkstra(g: &WeightedGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), source)));
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((OrderedFloat(nd), v)));
            }
        }
    }
    dist
}

/// Shortest distance between two nodes by enumerating every simple path.
pub fn exhaustive_distance(g: &WeightedGraph, from: usize, to: usize) -> f64 {
    fn walk(g: &WeightedGraph, at: usize, to: usize, len: f64, seen: &mut Vec<bool>, best: &mut f64) {
        if at == to {
            *best = best.min(len);
            return;
        }
        for (next, w) in g.neighbors(at) {
            if !seen[next] {
                seen[next] = true;
                walk(g, next, to, len + w, seen, best);
                seen[next] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut seen = vec![false; g.node_count()];
    seen[from] = true;
    walk(g, from, to, 0.0, &mut seen, &mut best);
    best
}

/// A two-level catalog: `topics` subtrees under one root, each with a few
/// leaf classes, some carrying attributes.
pub fn topic_ontology<R: Rng>(rng: &mut R, topics: usize) -> Ontology {
    let mut classes = vec![serde_json::json!({"id": "root", "name": "Catalog"})];
    for t in 0..topics {
        classes.push(serde_json::json!({"id": format!("t{t}"), "name": format!("Topic {t}"), "parent": "root"}));
        for c in 0..rng.gen_range(2..=4) {
            let attributes: Vec<_> = (0..rng.gen_range(0..=2))
                .map(|a| serde_json::json!({"id": format!("t{t}c{c}a{a}"), "name": format!("Attr {t} {c} {a}")}))
                .collect();
            classes.push(serde_json::json!({
                "id": format!("t{t}c{c}"),
                "name": format!("Class {t} {c}"),
                "parent": format!("t{t}"),
                "attributes": attributes,
            }));
        }
    }
    Ontology::from_json(&serde_json::json!({ "classes": classes }).to_string()).unwrap()
}

/// Users that each ask about one topic and mostly name its classes exactly.
/// A few users ask nothing matchable.
pub fn topic_profiles<R: Rng>(
    rng: &mut R,
    ontology: &Ontology,
    users: usize,
    max_requests: usize,
) -> Vec<UserProfile> {
    let mut by_topic: BTreeMap<String, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for c in ontology.classes() {
        if let Some(parent) = &c.parent {
            if parent != "root" {
                let entry = by_topic.entry(parent.clone()).or_default();
                entry.0.push(c.id.clone());
                entry.1.extend(c.attribute_ids.iter().cloned());
            }
        }
    }
    let topics: Vec<&String> = by_topic.keys().collect();
    let mut out = Vec::new();
    for u in 0..users {
        let home = topics[u % topics.len()];
        let mut reports = Vec::new();
        if !rng.gen_bool(0.1) {
            for r in 0..rng.gen_range(1..=max_requests) {
                let (classes, attrs) = &by_topic[home];
                let picked: BTreeSet<&String> =
                    (0..rng.gen_range(1..=2)).map(|_| classes.choose(rng).unwrap()).collect();
                let class_scores = picked
                    .into_iter()
                    .map(|c| {
                        let sim = if rng.gen_bool(0.7) { 1.0 } else { rng.gen_range(0.3..1.0) };
                        Score::new(c, sim)
                    })
                    .collect();
                let attribute_scores = match attrs.choose(rng) {
                    Some(a) if rng.gen_bool(0.4) => vec![Score::new(a, rng.gen_range(0.05..=1.0))],
                    _ => Vec::new(),
                };
                reports.push(SimilarityReport {
                    request_id: format!("u{u:02}r{r}"),
                    class_scores,
                    attribute_scores,
                });
            }
        }
        out.push(UserProfile {
            user_id: format!("u{u:02}"),
            personal: BTreeMap::new(),
            reports,
        });
    }
    out
}

/// Ordinary least squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

