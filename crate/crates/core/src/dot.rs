//! Graphviz DOT rendering. Classes are ovals, attributes dashed ovals,
//! users and requests boxes; clusters are drawn as enclosing boxes.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::clustering::Clustering;
use crate::graph::{NodeKind, WeightedGraph};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn cluster_label(i: usize, mass: f64, size: usize) -> String {
    format!("cluster {} ({} members, mass {:.4})", i + 1, size, mass)
}

/// Renders a user-ontology graph. With a clustering, each cluster's user
/// nodes are wrapped in their own subgraph box, singletons included.
pub fn graph_to_dot(g: &WeightedGraph, clustering: Option<&Clustering>) -> String {
    let mut out = String::from("graph G {\n  node [fontname=\"Helvetica\"];\n");
    let node_line = |i: usize| {
        let node = &g.nodes()[i];
        let label = node.label.as_deref().unwrap_or(&node.id);
        let attrs = match node.kind {
            NodeKind::Class => "shape=ellipse",
            NodeKind::Attribute => "shape=ellipse, style=dashed",
            NodeKind::User => "shape=box",
        };
        format!("n{i} [label={}, {attrs}];", quote(label))
    };

    let mut cluster_of: HashMap<&str, usize> = HashMap::new();
    if let Some(c) = clustering {
        for (k, cluster) in c.clusters.iter().enumerate() {
            for m in &cluster.members {
                cluster_of.insert(m, k);
            }
        }
    }
    for i in 0..g.node_count() {
        let node = &g.nodes()[i];
        if node.kind == NodeKind::User && cluster_of.contains_key(node.id.as_str()) {
            continue;
        }
        let _ = writeln!(out, "  {}", node_line(i));
    }
    if let Some(c) = clustering {
        for (k, cluster) in c.clusters.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{k} {{");
            let _ = writeln!(
                out,
                "    label={};\n    style=rounded;",
                quote(&cluster_label(k, cluster.mass, cluster.members.len()))
            );
            for m in &cluster.members {
                if let Some(i) = g.find(NodeKind::User, m) {
                    let _ = writeln!(out, "    {}", node_line(i));
                }
            }
            out.push_str("  }\n");
        }
    }
    for (a, b, w) in g.edges() {
        let _ = writeln!(out, "  n{a} -- n{b} [label=\"{w:.4}\"];");
    }
    out.push_str("}\n");
    out
}

/// Renders a clustering on its own: members as boxes inside cluster boxes,
/// joined by the arcs of the merge log.
pub fn clustering_to_dot(c: &Clustering) -> String {
    let mut out = String::from("graph G {\n  node [fontname=\"Helvetica\", shape=box];\n");
    for (k, cluster) in c.clusters.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{k} {{");
        let _ = writeln!(
            out,
            "    label={};\n    style=rounded;",
            quote(&cluster_label(k, cluster.mass, cluster.members.len()))
        );
        for m in &cluster.members {
            let _ = writeln!(out, "    {};", quote(m));
        }
        out.push_str("  }\n");
    }
    for step in &c.merge_log {
        let _ = writeln!(
            out,
            "  {} -- {} [label=\"{:.4}\"];",
            quote(&step.left),
            quote(&step.right),
            step.arc_weight
        );
    }
    out.push_str("}\n");
    out
}
