//! In-memory ontology: classes arranged in an is-a forest, attributes owned by
//! classes, and a synonym table.
//!
//! Ontologies are loaded from a JSON document:
//!
//! ```json
//! {
//!   "classes": [
//!     { "id": "projects", "name": "Projects", "attributes": [] },
//!     { "id": "pick", "name": "Pick & place", "parent": "projects",
//!       "attributes": [ { "id": "payload", "name": "Pay load", "unit": "kg" } ] }
//!   ],
//!   "synonyms": { "handling": "pick" }
//! }
//! ```
//!
//! Identifiers share one namespace across classes and attributes so that a
//! synonym target is never ambiguous. Numeric identifiers are accepted and
//! stored as their decimal text.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("malformed ontology document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid ontology: {problems}")]
    Validation { problems: ProblemList },
    #[error("cycle in class hierarchy through class `{class_id}`")]
    Cycle { class_id: String },
}

/// Human-readable list of validation failures, each naming the offending ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemList(pub Vec<String>);

impl fmt::Display for ProblemList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyClass {
    pub id: String,
    pub name: String,
    pub parent: Option<String>,
    pub attribute_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyAttribute {
    pub id: String,
    pub name: String,
    pub owner_class: String,
    pub unit: Option<String>,
}

impl OntologyAttribute {
    /// Words of the attribute name, split on whitespace.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.name.split_whitespace()
    }
}

/// What a synonym resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term<'a> {
    Class(&'a OntologyClass),
    Attribute(&'a OntologyAttribute),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArcKind {
    /// Child class to parent class.
    #[serde(rename = "CC")]
    ClassClass,
    /// Attribute to its owning class.
    #[serde(rename = "CA")]
    ClassAttribute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyArc<'a> {
    pub from: &'a str,
    pub to: &'a str,
    pub kind: ArcKind,
}

/// A validated ontology. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    classes: Vec<OntologyClass>,
    attributes: Vec<OntologyAttribute>,
    synonyms: BTreeMap<String, String>,
    class_index: HashMap<String, usize>,
    attribute_index: HashMap<String, usize>,
}

impl Default for Ontology {
    fn default() -> Self {
        Self::empty()
    }
}

impl Ontology {
    pub fn empty() -> Self {
        Ontology {
            classes: Vec::new(),
            attributes: Vec::new(),
            synonyms: BTreeMap::new(),
            class_index: HashMap::new(),
            attribute_index: HashMap::new(),
        }
    }

    /// Builds and validates an ontology from its parts.
    pub fn new(
        classes: Vec<OntologyClass>,
        attributes: Vec<OntologyAttribute>,
        synonyms: BTreeMap<String, String>,
    ) -> Result<Self, OntologyError> {
        let mut problems = Vec::new();
        let mut class_index = HashMap::with_capacity(classes.len());
        let mut attribute_index = HashMap::with_capacity(attributes.len());

        for (i, class) in classes.iter().enumerate() {
            if class.id.is_empty() {
                problems.push(format!("class #{i} has an empty id"));
            }
            if class_index.insert(class.id.clone(), i).is_some() {
                problems.push(format!("duplicate class id `{}`", class.id));
            }
        }
        for (i, attr) in attributes.iter().enumerate() {
            if attr.id.is_empty() {
                problems.push(format!("attribute #{i} has an empty id"));
            }
            if class_index.contains_key(&attr.id) {
                problems.push(format!("attribute id `{}` is also a class id", attr.id));
            }
            if attribute_index.insert(attr.id.clone(), i).is_some() {
                problems.push(format!("duplicate attribute id `{}`", attr.id));
            }
            if attr.name.split_whitespace().next().is_none() {
                problems.push(format!("attribute `{}` has an empty name", attr.id));
            }
            match class_index.get(&attr.owner_class) {
                None => problems.push(format!(
                    "attribute `{}` owned by unknown class `{}`",
                    attr.id, attr.owner_class
                )),
                Some(&c) if !classes[c].attribute_ids.contains(&attr.id) => problems.push(format!(
                    "attribute `{}` not listed by its owner class `{}`",
                    attr.id, attr.owner_class
                )),
                Some(_) => {}
            }
        }
        for class in &classes {
            if let Some(parent) = &class.parent {
                if !class_index.contains_key(parent) {
                    problems.push(format!(
                        "class `{}` has unknown parent `{parent}`",
                        class.id
                    ));
                }
            }
            for attr_id in &class.attribute_ids {
                match attribute_index.get(attr_id) {
                    Some(&a) if attributes[a].owner_class == class.id => {}
                    _ => problems.push(format!(
                        "class `{}` lists attribute `{attr_id}` it does not own",
                        class.id
                    )),
                }
            }
        }
        for (term, target) in &synonyms {
            if !class_index.contains_key(target) && !attribute_index.contains_key(target) {
                problems.push(format!("synonym `{term}` targets unknown id `{target}`"));
            }
        }
        if !problems.is_empty() {
            return Err(OntologyError::Validation {
                problems: ProblemList(problems),
            });
        }

        let ontology = Ontology {
            classes,
            attributes,
            synonyms,
            class_index,
            attribute_index,
        };
        ontology.check_acyclic()?;
        Ok(ontology)
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        // 0 = unvisited, 1 = on the current chain, 2 = known to reach a root
        let mut state = vec![0u8; self.classes.len()];
        for start in 0..self.classes.len() {
            let mut chain = Vec::new();
            let mut cur = Some(start);
            while let Some(i) = cur {
                match state[i] {
                    2 => break,
                    1 => {
                        return Err(OntologyError::Cycle {
                            class_id: self.classes[i].id.clone(),
                        })
                    }
                    _ => {}
                }
                state[i] = 1;
                chain.push(i);
                cur = self.classes[i]
                    .parent
                    .as_ref()
                    .map(|p| self.class_index[p.as_str()]);
            }
            for i in chain {
                state[i] = 2;
            }
        }
        Ok(())
    }

    pub fn from_json(document: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDocument =
            serde_json::from_str(document).map_err(|e| OntologyError::Malformed {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        doc.into_ontology()
    }

    /// Serializes to the canonical JSON document (pretty-printed, trailing newline).
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.to_document())
            .expect("ontology document always serializes");
        out.push('\n');
        out
    }

    fn to_document(&self) -> OntologyDocument {
        OntologyDocument {
            classes: self
                .classes
                .iter()
                .map(|c| ClassDoc {
                    id: Id(c.id.clone()),
                    name: c.name.clone(),
                    parent: c.parent.clone().map(Id),
                    attributes: c
                        .attribute_ids
                        .iter()
                        .map(|a| {
                            let attr = &self.attributes[self.attribute_index[a]];
                            AttributeDoc {
                                id: Id(attr.id.clone()),
                                name: attr.name.clone(),
                                unit: attr.unit.clone(),
                            }
                        })
                        .collect(),
                })
                .collect(),
            synonyms: self
                .synonyms
                .iter()
                .map(|(k, v)| (k.clone(), Id(v.clone())))
                .collect(),
        }
    }

    /// SHA-256 digest of the canonical document; identifies an ontology version.
    pub fn version(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn classes(&self) -> &[OntologyClass] {
        &self.classes
    }

    pub fn attributes(&self) -> &[OntologyAttribute] {
        &self.attributes
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn class(&self, id: &str) -> Option<&OntologyClass> {
        self.class_index.get(id).map(|&i| &self.classes[i])
    }

    pub fn attribute(&self, id: &str) -> Option<&OntologyAttribute> {
        self.attribute_index.get(id).map(|&i| &self.attributes[i])
    }

    pub fn resolve_synonym(&self, term: &str) -> Option<Term<'_>> {
        let target = self.synonyms.get(term)?;
        self.class(target)
            .map(Term::Class)
            .or_else(|| self.attribute(target).map(Term::Attribute))
    }

    /// Lower-cased whitespace-separated words of every class name, attribute
    /// name and synonym key.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.classes
            .iter()
            .map(|c| c.name.as_str())
            .chain(self.attributes.iter().map(|a| a.name.as_str()))
            .chain(self.synonyms.keys().map(String::as_str))
            .flat_map(str::split_whitespace)
            .map(str::to_lowercase)
            .collect()
    }

    /// One CC arc per child/parent pair followed by one CA arc per attribute.
    pub fn taxonomy_arcs(&self) -> Vec<TaxonomyArc<'_>> {
        let cc = self.classes.iter().filter_map(|c| {
            c.parent.as_deref().map(|p| TaxonomyArc {
                from: &c.id,
                to: p,
                kind: ArcKind::ClassClass,
            })
        });
        let ca = self.attributes.iter().map(|a| TaxonomyArc {
            from: &a.id,
            to: &a.owner_class,
            kind: ArcKind::ClassAttribute,
        });
        cc.chain(ca).collect()
    }
}

/// Identifier that deserializes from either a JSON string or integer.
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
struct Id(String);

impl<'de> Deserialize<'de> for Id {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        Ok(Id(match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Int(i) => i.to_string(),
        }))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyDocument {
    classes: Vec<ClassDoc>,
    #[serde(default)]
    synonyms: BTreeMap<String, Id>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    id: Id,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<Id>,
    #[serde(default)]
    attributes: Vec<AttributeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeDoc {
    id: Id,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
}

impl OntologyDocument {
    fn into_ontology(self) -> Result<Ontology, OntologyError> {
        let mut classes = Vec::with_capacity(self.classes.len());
        let mut attributes = Vec::new();
        for class in self.classes {
            let class_id = class.id.0;
            let mut attribute_ids = Vec::with_capacity(class.attributes.len());
            for attr in class.attributes {
                attribute_ids.push(attr.id.0.clone());
                attributes.push(OntologyAttribute {
                    id: attr.id.0,
                    name: attr.name,
                    owner_class: class_id.clone(),
                    unit: attr.unit,
                });
            }
            classes.push(OntologyClass {
                id: class_id,
                name: class.name,
                parent: class.parent.map(|p| p.0),
                attribute_ids,
            });
        }
        let synonyms = self.synonyms.into_iter().map(|(k, v)| (k, v.0)).collect();
        Ontology::new(classes, attributes, synonyms)
    }
}
