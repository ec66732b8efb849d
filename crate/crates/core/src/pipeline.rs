//! End-to-end run: request records to similarity reports, user-ontology
//! graph, user distances and clusters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_users, Clustering};
use crate::graph::{
    all_pairs_user_distances, build_user_ontology_graph, DistanceTable, GraphParams,
    UserProfile, WeightedGraph,
};
use crate::similarity::Matcher;
use crate::store::{load_profiles, request_profiles, RequestRecord};
use crate::Error;

/// What gets clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Users, each described by all of their requests.
    #[default]
    Users,
    /// Individual requests, each treated as its own user.
    Requests,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "users" => Ok(Mode::Users),
            "requests" => Ok(Mode::Requests),
            other => Err(format!("unknown mode `{other}` (expected users or requests)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Users => "users",
            Mode::Requests => "requests",
        })
    }
}

pub fn profiles_for_mode(
    records: &[RequestRecord],
    personal: &BTreeMap<String, BTreeMap<String, String>>,
    matcher: &Matcher<'_>,
    mode: Mode,
) -> Vec<UserProfile> {
    match mode {
        Mode::Users => load_profiles(records, personal, matcher),
        Mode::Requests => request_profiles(records, matcher),
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub profiles: Vec<UserProfile>,
    pub graph: WeightedGraph,
    pub distances: DistanceTable,
    pub clustering: Clustering,
}

/// Clusters already-scored profiles.
pub fn cluster_profiles(
    profiles: Vec<UserProfile>,
    matcher: &Matcher<'_>,
    params: &GraphParams,
    d_max: f64,
) -> Result<PipelineOutput, Error> {
    let graph = build_user_ontology_graph(&profiles, matcher.ontology(), params)?;
    let distances = all_pairs_user_distances(&graph);
    let clustering = cluster_users(&distances, d_max)?;
    Ok(PipelineOutput {
        profiles,
        graph,
        distances,
        clustering,
    })
}

pub fn run(
    records: &[RequestRecord],
    personal: &BTreeMap<String, BTreeMap<String, String>>,
    matcher: &Matcher<'_>,
    params: &GraphParams,
    d_max: f64,
    mode: Mode,
) -> Result<PipelineOutput, Error> {
    params.validate()?;
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(crate::clustering::ClusterError::InvalidDMax(d_max).into());
    }
    let profiles = profiles_for_mode(records, personal, matcher, mode);
    cluster_profiles(profiles, matcher, params, d_max)
}
