//! Ontology-driven clustering of customers and their free-text requests.
//!
//! Requests are normalized ([`text`]), scored against the classes and
//! attributes of an [`ontology`] ([`similarity`]), turned into a weighted
//! user-ontology graph and reduced to user-to-user distances ([`graph`]),
//! then grouped by mass-bounded agglomerative clustering ([`clustering`]).
//! [`sweep`] maps cluster counts over the threshold parameters.

pub mod clustering;
pub mod dot;
pub mod graph;
pub mod ontology;
pub mod pipeline;
pub mod report;
pub mod similarity;
pub mod store;
pub mod sweep;
pub mod text;

pub use clustering::{cluster_mass, cluster_users, Cluster, ClusterError, Clustering, MergeStep};
pub use graph::{
    aggregate_arc_weight, all_pairs_user_distances, build_user_ontology_graph, DistanceTable,
    GraphError, GraphNode, GraphParams, NodeKind, UserProfile, WeightedGraph,
};
pub use ontology::{Ontology, OntologyAttribute, OntologyClass, OntologyError};
pub use pipeline::{Mode, PipelineOutput};
pub use report::{emit_similarity_xml, parse_similarity_xml, Score, SimilarityReport, XmlError};
pub use similarity::{fuzzy_string_similarity, Matcher, SimilarityError};
pub use store::{RequestLog, RequestRecord, StoreError};
pub use sweep::{find_plateau, run_sweep, Plateau, SweepError, SweepGrid, SweepResult};
pub use text::{Language, PipelineConfig, ProcessedRequest, TextError, TextPipeline, Token, TokenKind};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Store(#[from] StoreError),
}
