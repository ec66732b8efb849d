//! Mass-bounded agglomerative clustering of the user-to-user distance table.
//!
//! Every user starts as its own cluster with mass 0. The candidate value of
//! joining two adjacent clusters is the arc between them plus both masses;
//! the cheapest candidate is merged while it does not exceed `d_max`, and the
//! merged cluster's mass becomes that candidate value. After a merge the arc
//! from the new cluster to a neighbour is the shorter of the two old arcs.
//! Infinite arcs are never candidates.
//!
//! Ties on the candidate value go to the lexicographically smallest pair of
//! representative user ids, where a cluster is represented by its smallest
//! member id.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DistanceTable;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("d_max must be a positive finite number, got {0}")]
    InvalidDMax(f64),
    #[error("malformed clustering document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Member user ids, sorted.
    pub members: Vec<String>,
    pub mass: f64,
}

/// One accepted merge: `left` and `right` are the representatives of the
/// joined clusters, `mass` the mass of the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: String,
    pub right: String,
    pub arc_weight: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub d_max: f64,
    /// Ordered by smallest member id.
    pub clusters: Vec<Cluster>,
    pub merge_log: Vec<MergeStep>,
}

pub const CLUSTERING_KIND: &str = "clustering";

#[derive(Serialize, Deserialize)]
struct ClusteringDocument {
    kind: String,
    #[serde(flatten)]
    clustering: Clustering,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Index of the cluster holding `user`.
    pub fn cluster_of(&self, user: &str) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.members.iter().any(|m| m == user))
    }

    /// Rebuilds the partition of `users` by applying the merge log to
    /// singletons. Groups come back sorted like `clusters`.
    pub fn replay(&self, users: &[String]) -> Vec<Vec<String>> {
        let mut sorted: Vec<&String> = users.iter().collect();
        sorted.sort();
        let index = |u: &str| sorted.binary_search_by(|s| s.as_str().cmp(u)).ok();
        let mut sets = DisjointSets::new(sorted.len());
        for step in &self.merge_log {
            if let (Some(a), Some(b)) = (index(&step.left), index(&step.right)) {
                sets.union(a, b);
            }
        }
        let mut groups: Vec<Vec<String>> = vec![Vec::new(); sorted.len()];
        for (i, u) in sorted.iter().enumerate() {
            groups[sets.find(i)].push((*u).clone());
        }
        groups.retain(|g| !g.is_empty());
        groups.sort();
        groups
    }

    pub fn to_json(&self) -> String {
        let doc = ClusteringDocument {
            kind: CLUSTERING_KIND.to_string(),
            clustering: self.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("clustering serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ClusterError> {
        let doc: ClusteringDocument =
            serde_json::from_str(text).map_err(|e| ClusterError::Malformed(e.to_string()))?;
        if doc.kind != CLUSTERING_KIND {
            return Err(ClusterError::Malformed(format!(
                "expected kind `{CLUSTERING_KIND}`, found `{}`",
                doc.kind
            )));
        }
        Ok(doc.clustering)
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets; the smaller root survives.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        self.parent[drop] = keep;
        keep
    }
}

type Candidate = Reverse<(OrderedFloat<f64>, usize, usize, u32, u32)>;

/// Clusters the users of `g2` so that no cluster mass exceeds `d_max`.
pub fn cluster_users(g2: &DistanceTable, d_max: f64) -> Result<Clustering, ClusterError> {
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(ClusterError::InvalidDMax(d_max));
    }

    // Work in rank order so that cluster indices compare like user ids.
    let n = g2.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g2.users()[a].cmp(&g2.users()[b]));
    let ids: Vec<&str> = order.iter().map(|&i| g2.users()[i].as_str()).collect();
    let mut arc = vec![f64::INFINITY; n * n];
    for (a, &ua) in order.iter().enumerate() {
        for (b, &ub) in order.iter().enumerate() {
            if a != b {
                arc[a * n + b] = g2.get(ua, ub);
            }
        }
    }

    let mut mass = vec![0.0f64; n];
    let mut alive = vec![true; n];
    let mut version = vec![0u32; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();

    let push = |heap: &mut BinaryHeap<Candidate>, a: usize, b: usize, w: f64, m: &[f64], v: &[u32]| {
        let (a, b) = (a.min(b), a.max(b));
        let value = w + m[a] + m[b];
        heap.push(Reverse((OrderedFloat(value), a, b, v[a], v[b])));
    };

    for a in 0..n {
        for b in a + 1..n {
            let w = arc[a * n + b];
            if w.is_finite() {
                push(&mut heap, a, b, w, &mass, &version);
            }
        }
    }

    let mut merge_log = Vec::new();
    while let Some(Reverse((OrderedFloat(value), a, b, va, vb))) = heap.pop() {
        if !alive[a] || !alive[b] || version[a] != va || version[b] != vb {
            continue;
        }
        if value > d_max {
            break;
        }
        let w = arc[a * n + b];
        mass[a] = w + mass[a] + mass[b];
        alive[b] = false;
        version[a] += 1;
        let absorbed = std::mem::take(&mut members[b]);
        members[a].extend(absorbed);
        merge_log.push(MergeStep {
            left: ids[a].to_string(),
            right: ids[b].to_string(),
            arc_weight: w,
            mass: mass[a],
        });
        for k in 0..n {
            if k == a || !alive[k] {
                continue;
            }
            let joined = arc[a * n + k].min(arc[b * n + k]);
            arc[a * n + k] = joined;
            arc[k * n + a] = joined;
            if joined.is_finite() {
                push(&mut heap, a, k, joined, &mass, &version);
            }
        }
    }

    let clusters = (0..n)
        .filter(|&i| alive[i])
        .map(|i| {
            let mut m: Vec<String> = members[i].iter().map(|&r| ids[r].to_string()).collect();
            m.sort();
            Cluster {
                members: m,
                mass: mass[i],
            }
        })
        .collect();
    Ok(Clustering {
        d_max,
        clusters,
        merge_log,
    })
}

/// Mass of a cluster recomputed from the merge log: the merges among its
/// members are replayed, each link re-derived as the shortest `g2` distance
/// between the two sides, and masses accumulated as link + both masses.
///
/// This is the mass [`cluster_users`] enforces. It differs from
/// [`definitional_mass`], which sums every pairwise arc in the cluster.
pub fn cluster_mass(cluster: &Cluster, merge_log: &[MergeStep], g2: &DistanceTable) -> f64 {
    let members = &cluster.members;
    let local = |u: &str| members.iter().position(|m| m == u);
    let global: Vec<Option<usize>> = members.iter().map(|m| g2.index_of(m)).collect();
    let mut sets = DisjointSets::new(members.len());
    let mut masses = vec![0.0f64; members.len()];
    for step in merge_log {
        let (Some(l), Some(r)) = (local(&step.left), local(&step.right)) else {
            continue;
        };
        let (rl, rr) = (sets.find(l), sets.find(r));
        if rl == rr {
            continue;
        }
        let mut link = f64::INFINITY;
        for x in 0..members.len() {
            if sets.find(x) != rl {
                continue;
            }
            for y in 0..members.len() {
                if sets.find(y) == rr {
                    if let (Some(gx), Some(gy)) = (global[x], global[y]) {
                        link = link.min(g2.get(gx, gy));
                    }
                }
            }
        }
        let m = link + masses[rl] + masses[rr];
        let root = sets.union(rl, rr);
        masses[root] = m;
    }
    if members.is_empty() {
        0.0
    } else {
        masses[sets.find(0)]
    }
}

/// Sum of the `g2` distances over all member pairs (finite ones only).
pub fn definitional_mass(members: &[String], g2: &DistanceTable) -> f64 {
    let idx: Vec<usize> = members.iter().filter_map(|m| g2.index_of(m)).collect();
    let mut total = 0.0;
    for (i, &a) in idx.iter().enumerate() {
        for &b in &idx[i + 1..] {
            let d = g2.get(a, b);
            if d.is_finite() {
                total += d;
            }
        }
    }
    total
}
