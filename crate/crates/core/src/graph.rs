//! The weighted user-ontology graph and its reduction to user-to-user
//! shortest-path distances.
//!
//! Lower weights mean stronger affinity. Class/class and class/attribute
//! arcs carry fixed administrator weights; user arcs are derived from the
//! similarity reports of the user's requests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ArcKind, Ontology};
use crate::report::SimilarityReport;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("{count} similarities exceed n_max = {n_max}")]
    TooManySimilarities { count: usize, n_max: usize },
    #[error("cannot aggregate an empty list of similarities")]
    NoSimilarities,
    #[error("similarity {0} is outside (0, 1]")]
    SimilarityOutOfRange(f64),
    #[error("request `{request_id}` of user `{user_id}` references unknown {kind} `{id}`")]
    UnknownReference {
        user_id: String,
        request_id: String,
        kind: NodeKind,
        id: String,
    },
    #[error("user `{0}` appears in more than one profile")]
    DuplicateUser(String),
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("malformed distance table at line {line}: {message}")]
    MalformedTable { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Class,
    Attribute,
    User,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Class => "class",
            NodeKind::Attribute => "attribute",
            NodeKind::User => "user",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub kind: NodeKind,
    /// Display label (class or attribute name, or the request text).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub cc_weight: f64,
    pub ca_weight: f64,
    pub epsilon: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            cc_weight: 0.2,
            ca_weight: 0.2,
            epsilon: 0.001,
        }
    }
}

impl GraphParams {
    pub fn new(cc_weight: f64, ca_weight: f64, epsilon: f64) -> Result<Self, GraphError> {
        let params = GraphParams {
            cc_weight,
            ca_weight,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Requires `0 < epsilon < 1` and `epsilon <= cc_weight, ca_weight < 1`.
    /// Equality with epsilon is allowed so ontology arcs can be made
    /// negligible.
    pub fn validate(&self) -> Result<(), GraphError> {
        let GraphParams {
            cc_weight,
            ca_weight,
            epsilon,
        } = *self;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GraphError::InvalidParams(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        for (name, w) in [("cc_weight", cc_weight), ("ca_weight", ca_weight)] {
            if !(w >= epsilon && w < 1.0) {
                return Err(GraphError::InvalidParams(format!(
                    "{name} must lie in [epsilon, 1) = [{epsilon}, 1), got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// A user and the similarity reports of their requests.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    #[serde(default)]
    pub personal: BTreeMap<String, String>,
    pub reports: Vec<SimilarityReport>,
}

/// Combines the per-request similarities of one node/user pair into one arc
/// weight: each request contributes `1 - max(epsilon, 1 - sim)` out of
/// `n_max`, and the result is floored at `epsilon`.
pub fn aggregate_arc_weight(sims: &[f64], n_max: usize, epsilon: f64) -> Result<f64, GraphError> {
    if sims.is_empty() {
        return Err(GraphError::NoSimilarities);
    }
    if sims.len() > n_max {
        return Err(GraphError::TooManySimilarities {
            count: sims.len(),
            n_max,
        });
    }
    if let Some(&bad) = sims.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
        return Err(GraphError::SimilarityOutOfRange(bad));
    }
    let pull: f64 = sims.iter().map(|s| 1.0 - (1.0 - s).max(epsilon)).sum();
    Ok((1.0 - pull / n_max as f64).max(epsilon))
}

/// Undirected graph with positive arc weights, stored as adjacency lists.
/// Absent arcs read as infinite weight and `weight(i, i) == 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    nodes: Vec<GraphNode>,
    adjacency: Vec<BTreeMap<usize, f64>>,
    index: HashMap<(NodeKind, String), usize>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node, or returns the index of the existing node with this kind
    /// and id.
    pub fn add_node(&mut self, kind: NodeKind, id: &str, label: Option<&str>) -> usize {
        if let Some(&i) = self.index.get(&(kind, id.to_string())) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(GraphNode {
            id: id.to_string(),
            kind,
            label: label.map(str::to_string),
        });
        self.adjacency.push(BTreeMap::new());
        self.index.insert((kind, id.to_string()), i);
        i
    }

    /// Adds an undirected arc. A parallel arc keeps the smaller weight.
    ///
    /// # Panics
    /// On a self-loop or a weight that is not finite and positive.
    pub fn add_arc(&mut self, a: usize, b: usize, weight: f64) {
        assert!(a != b, "self-loop on node {a}");
        assert!(weight.is_finite() && weight > 0.0, "arc weight {weight}");
        for (x, y) in [(a, b), (b, a)] {
            self.adjacency[x]
                .entry(y)
                .and_modify(|w| *w = w.min(weight))
                .or_insert(weight);
        }
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn find(&self, kind: NodeKind, id: &str) -> Option<usize> {
        self.index.get(&(kind, id.to_string())).copied()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.adjacency[i].get(&j).copied().unwrap_or(f64::INFINITY)
        }
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency[i].iter().map(|(&j, &w)| (j, w))
    }

    /// Each undirected arc once, as `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            adj.range(i + 1..).map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn user_indices(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::User)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            kind: GRAPH_KIND.to_string(),
            nodes: self.nodes.clone(),
            edges: self
                .edges()
                .map(|(from, to, weight)| EdgeDoc { from, to, weight })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("graph serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        if doc.kind != GRAPH_KIND {
            return Err(GraphError::Malformed(format!(
                "expected kind `{GRAPH_KIND}`, found `{}`",
                doc.kind
            )));
        }
        let mut g = WeightedGraph::new();
        for node in &doc.nodes {
            let before = g.node_count();
            if g.add_node(node.kind, &node.id, node.label.as_deref()) != before {
                return Err(GraphError::Malformed(format!(
                    "duplicate {} node `{}`",
                    node.kind, node.id
                )));
            }
        }
        for e in doc.edges {
            let n = g.node_count();
            if e.from >= n || e.to >= n || e.from == e.to {
                return Err(GraphError::Malformed(format!(
                    "edge {} -> {} out of range",
                    e.from, e.to
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(GraphError::Malformed(format!("edge weight {}", e.weight)));
            }
            g.add_arc(e.from, e.to, e.weight);
        }
        Ok(g)
    }
}

pub const GRAPH_KIND: &str = "graph";

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    kind: String,
    nodes: Vec<GraphNode>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: usize,
    to: usize,
    weight: f64,
}

/// Builds the user-ontology graph. Nodes are laid out as classes, then
/// attributes (both in ontology order), then users in profile order.
///
/// `n_max` is the largest number of requests of a single user that hit the
/// same node, taken separately over classes and over attributes.
pub fn build_user_ontology_graph(
    profiles: &[UserProfile],
    ontology: &Ontology,
    params: &GraphParams,
) -> Result<WeightedGraph, GraphError> {
    params.validate()?;
    let mut g = WeightedGraph::new();
    for c in ontology.classes() {
        g.add_node(NodeKind::Class, &c.id, Some(&c.name));
    }
    for a in ontology.attributes() {
        g.add_node(NodeKind::Attribute, &a.id, Some(&a.name));
    }
    for arc in ontology.taxonomy_arcs() {
        let (from, weight) = match arc.kind {
            ArcKind::ClassClass => (g.find(NodeKind::Class, arc.from), params.cc_weight),
            ArcKind::ClassAttribute => (g.find(NodeKind::Attribute, arc.from), params.ca_weight),
        };
        let to = g.find(NodeKind::Class, arc.to);
        g.add_arc(from.expect("validated ontology"), to.expect("validated ontology"), weight);
    }

    // (node index, user index) -> similarities, one per request
    let mut hits: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for profile in profiles {
        if g.find(NodeKind::User, &profile.user_id).is_some() {
            return Err(GraphError::DuplicateUser(profile.user_id.clone()));
        }
        let label = profile
            .personal
            .get("label")
            .or_else(|| profile.personal.get("name"));
        let u = g.add_node(NodeKind::User, &profile.user_id, label.map(String::as_str));
        for report in &profile.reports {
            let scores = [
                (NodeKind::Class, &report.class_scores),
                (NodeKind::Attribute, &report.attribute_scores),
            ];
            for (kind, list) in scores {
                for s in list.iter() {
                    let node = g.find(kind, &s.id).ok_or_else(|| GraphError::UnknownReference {
                        user_id: profile.user_id.clone(),
                        request_id: report.request_id.clone(),
                        kind,
                        id: s.id.clone(),
                    })?;
                    hits.entry((node, u)).or_default().push(s.value);
                }
            }
        }
    }

    let n_max = |kind: NodeKind| {
        hits.iter()
            .filter(|((node, _), _)| g.nodes[*node].kind == kind)
            .map(|(_, sims)| sims.len())
            .max()
            .unwrap_or(1)
    };
    let class_n_max = n_max(NodeKind::Class);
    let attribute_n_max = n_max(NodeKind::Attribute);
    for ((node, user), sims) in hits {
        let n_max = match g.nodes[node].kind {
            NodeKind::Class => class_n_max,
            _ => attribute_n_max,
        };
        let w = aggregate_arc_weight(&sims, n_max, params.epsilon)?;
        g.add_arc(node, user, w);
    }
    Ok(g)
}

/// Square table of user-to-user shortest-path lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    users: Vec<String>,
    values: Vec<f64>,
}

impl DistanceTable {
    /// Builds a table from a row-major matrix.
    ///
    /// # Panics
    /// If `values.len() != users.len()²`.
    pub fn from_matrix(users: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), users.len() * users.len());
        DistanceTable { users, values }
    }

    /// Table from a list of user-to-user arcs; missing pairs are infinite.
    pub fn from_arcs(users: &[&str], arcs: &[(usize, usize, f64)]) -> Self {
        let n = users.len();
        let mut values = vec![f64::INFINITY; n * n];
        for i in 0..n {
            values[i * n + i] = 0.0;
        }
        for &(a, b, w) in arcs {
            values[a * n + b] = w;
            values[b * n + a] = w;
        }
        DistanceTable {
            users: users.iter().map(|u| u.to_string()).collect(),
            values,
        }
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.users.len() + j]
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.users.iter().position(|u| u == user)
    }

    /// Connected-component label for each user, labels numbered from 0 in
    /// order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(i) = stack.pop() {
                let reachable: Vec<usize> = (0..n)
                    .filter(|&j| label[j] == usize::MAX && self.get(i, j).is_finite())
                    .collect();
                for j in reachable {
                    label[j] = next;
                    stack.push(j);
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    /// CSV with a header row of user ids; infinite entries print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("user").chain(self.users.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (i, u) in self.users.iter().enumerate() {
            let mut row = vec![u.clone()];
            row.extend((0..self.len()).map(|j| format_distance(self.get(i, j))));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn from_csv(text: &str) -> Result<Self, GraphError> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let bad = |line: usize, message: String| GraphError::MalformedTable { line, message };
        let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
        let users: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let n = users.len();
        let mut values = Vec::with_capacity(n * n);
        for (row_no, record) in r.records().enumerate() {
            let line = row_no + 2;
            let record = record.map_err(|e| bad(line, e.to_string()))?;
            if record.len() != n + 1 || record.get(0) != users.get(row_no).map(String::as_str) {
                return Err(bad(line, "row does not match header".into()));
            }
            for field in record.iter().skip(1) {
                let v = match field {
                    "inf" => f64::INFINITY,
                    s => s
                        .parse::<f64>()
                        .map_err(|_| bad(line, format!("bad distance `{s}`")))?,
                };
                values.push(v);
            }
        }
        if values.len() != n * n {
            return Err(bad(n + 2, format!("expected {n} rows")));
        }
        Ok(DistanceTable { users, values })
    }
}

fn format_distance(d: f64) -> String {
    if d.is_infinite() {
        "inf".to_string()
    } else {
        d.to_string()
    }
}

/// Shortest-path length between every pair of users.
///
/// Runs the three-loop Floyd recurrence over the whole graph, with the pivot
/// in the outer loop and pairs whose legs are infinite skipped, then keeps
/// only the user rows and columns. Class and attribute nodes act as
/// intermediate hops.
pub fn all_pairs_user_distances(g0: &WeightedGraph) -> DistanceTable {
    let p = g0.node_count();
    let mut t = vec![f64::INFINITY; p * p];
    for i in 0..p {
        t[i * p + i] = 0.0;
        for (j, w) in g0.neighbors(i) {
            t[i * p + j] = w;
        }
    }

    let mut pivot_row = vec![0.0; p];
    for i in 0..p {
        // Row i is fixed while i is the pivot.
        pivot_row.copy_from_slice(&t[i * p..(i + 1) * p]);
        for j in 0..p {
            let t_ji = t[j * p + i];
            if j == i || t_ji.is_infinite() {
                continue;
            }
            let row_j = &mut t[j * p..(j + 1) * p];
            for (k, &t_ik) in pivot_row.iter().enumerate() {
                if k != i && t_ik.is_finite() {
                    let via = t_ji + t_ik;
                    if via < row_j[k] {
                        row_j[k] = via;
                    }
                }
            }
        }
    }

    let users = g0.user_indices();
    let n = users.len();
    let mut values = Vec::with_capacity(n * n);
    for &a in &users {
        for &b in &users {
            values.push(t[a * p + b]);
        }
    }
    DistanceTable {
        users: users.iter().map(|&u| g0.nodes()[u].id.clone()).collect(),
        values,
    }
}
