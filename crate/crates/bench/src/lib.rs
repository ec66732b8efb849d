//! Synthetic workloads for the benchmarks: product catalogs, request logs
//! built from catalog names, and random weighted graphs.

use std::collections::BTreeMap;

use ontoclust::store::RequestRecord;
use ontoclust::{NodeKind, Ontology, OntologyAttribute, OntologyClass, WeightedGraph};
use rand::seq::SliceRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "linear", "rotary", "vacuum", "parallel", "servo", "stepper", "compact", "heavy", "gantry",
    "gripper", "axis", "module", "drive", "motor", "sensor", "valve", "cylinder", "slide",
    "table", "belt", "spindle", "clamp", "feeder", "conveyor",
];

const FILLER: &[&str] = &[
    "we", "need", "a", "for", "with", "small", "parts", "please", "offer", "about", "the",
    "line", "boxes", "quickly",
];

fn name<R: Rng>(rng: &mut R, words: usize) -> String {
    let mut out: Vec<String> = (0..words)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    if let Some(first) = out.first_mut() {
        first[..1].make_ascii_uppercase();
    }
    out.join(" ")
}

/// A catalog of `topics` subtrees under one root, `per_topic` classes each,
/// every class carrying `attributes` attributes.
pub fn catalog<R: Rng>(rng: &mut R, topics: usize, per_topic: usize, attributes: usize) -> Ontology {
    let mut classes = vec![OntologyClass {
        id: "root".into(),
        name: "Catalog".into(),
        parent: None,
        attribute_ids: Vec::new(),
    }];
    let mut attrs = Vec::new();
    for t in 0..topics {
        let topic = format!("t{t}");
        classes.push(OntologyClass {
            id: topic.clone(),
            name: name(rng, 1),
            parent: Some("root".into()),
            attribute_ids: Vec::new(),
        });
        for c in 0..per_topic {
            let id = format!("t{t}c{c}");
            let attribute_ids: Vec<String> = (0..attributes).map(|a| format!("{id}a{a}")).collect();
            for a in &attribute_ids {
                attrs.push(OntologyAttribute {
                    id: a.clone(),
                    name: name(rng, 2),
                    owner_class: id.clone(),
                    unit: Some("mm".into()),
                });
            }
            let words = rng.gen_range(1..=2);
            classes.push(OntologyClass {
                id,
                name: name(rng, words),
                parent: Some(topic.clone()),
                attribute_ids,
            });
        }
    }
    Ontology::new(classes, attrs, BTreeMap::new()).expect("generated catalog is valid")
}

/// `users` customers with `per_user` requests each. A request mentions one
/// or two catalog names, maybe an attribute with a value, among filler words.
pub fn request_log<R: Rng>(rng: &mut R, ontology: &Ontology, users: usize, per_user: usize) -> Vec<RequestRecord> {
    let classes = ontology.classes();
    let attributes = ontology.attributes();
    let mut out = Vec::with_capacity(users * per_user);
    for u in 0..users {
        for _ in 0..per_user {
            let mut parts: Vec<String> = (0..rng.gen_range(1..=4))
                .map(|_| FILLER.choose(rng).unwrap().to_string())
                .collect();
            for _ in 0..rng.gen_range(1..=2) {
                parts.push(classes.choose(rng).unwrap().name.clone());
            }
            if let Some(a) = attributes.choose(rng) {
                if rng.gen_bool(0.5) {
                    parts.push(format!("{} {} mm", a.name, rng.gen_range(5..500)));
                }
            }
            let k = out.len();
            out.push(RequestRecord {
                request_id: format!("r{k}"),
                user_id: format!("u{u}"),
                timestamp: format!("2024-01-01T{:02}:{:02}:{:02}Z", (k / 3600) % 24, (k / 60) % 60, k % 60),
                language: "en".into(),
                text: parts.join(" "),
                report: None,
            });
        }
    }
    out
}

/// Random graph on `n` nodes, a third of them users, arcs present with
/// probability `density`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> WeightedGraph {
    let mut g = WeightedGraph::new();
    for i in 0..n {
        let kind = if i % 3 == 0 { NodeKind::User } else { NodeKind::Class };
        g.add_node(kind, &format!("n{i}"), None);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                g.add_arc(a, b, rng.gen_range(0.001..1.0));
            }
        }
    }
    g
}

/// Random lowercase word over the first `alphabet` letters.
pub fn word<R: Rng>(rng: &mut R, len: usize, alphabet: u8) -> String {
    (0..len).map(|_| (b'a' + rng.gen_range(0..alphabet)) as char).collect()
}
