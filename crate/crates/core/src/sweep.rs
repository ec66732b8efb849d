//! Parameter sweep over `d_max` and the class/class arc weight, used to pick
//! clustering thresholds from the plateaus of the cluster-count curve.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_users, ClusterError};
use crate::graph::{
    all_pairs_user_distances, build_user_ontology_graph, GraphError, GraphParams, UserProfile,
};
use crate::ontology::Ontology;

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub d_max_values: Vec<f64>,
    pub cc_weight_values: Vec<f64>,
    pub ca_weight: f64,
    pub epsilon: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.d_max_values.is_empty() || self.cc_weight_values.is_empty() {
            return Err(SweepError::Grid("grid axes must be non-empty".into()));
        }
        if let Some(bad) = self
            .d_max_values
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(SweepError::Grid(format!(
                "d_max values must be positive and finite, got {bad}"
            )));
        }
        if self.d_max_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::Grid(
                "d_max values must be strictly ascending".into(),
            ));
        }
        for &cc in &self.cc_weight_values {
            GraphParams::new(cc, self.ca_weight, self.epsilon)?;
        }
        Ok(())
    }

    /// `steps` values spaced evenly on a log scale from `low` to `high`.
    pub fn log_spaced(low: f64, high: f64, steps: usize) -> Vec<f64> {
        match steps {
            0 => Vec::new(),
            1 => vec![low],
            _ => {
                let (a, b) = (low.ln(), high.ln());
                let mut v: Vec<f64> = (0..steps)
                    .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp())
                    .collect();
                v[0] = low;
                v[steps - 1] = high;
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cc_weight: f64,
    pub d_max: f64,
    pub cluster_count: usize,
}

/// A maximal run of grid points with the same cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub d_max_start: f64,
    pub d_max_end: f64,
    pub cluster_count: usize,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        self.d_max_end - self.d_max_start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub user_count: usize,
    /// Grid order: cc_weight outer, d_max inner.
    pub rows: Vec<SweepRow>,
    pub plateaus: Vec<(f64, Vec<Plateau>)>,
}

impl SweepResult {
    /// The `(d_max, cluster_count)` curve for one cc_weight.
    pub fn curve(&self, cc_weight: f64) -> Vec<(f64, usize)> {
        self.rows
            .iter()
            .filter(|r| r.cc_weight == cc_weight)
            .map(|r| (r.d_max, r.cluster_count))
            .collect()
    }

    pub fn plateaus_for(&self, cc_weight: f64) -> &[Plateau] {
        self.plateaus
            .iter()
            .find(|(cc, _)| *cc == cc_weight)
            .map_or(&[], |(_, p)| p.as_slice())
    }

    /// Rows as CSV, followed by a `#`-prefixed plateau summary.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cc_weight", "d_max", "cluster_count"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.cc_weight.to_string(),
                r.d_max.to_string(),
                r.cluster_count.to_string(),
            ])
            .expect("in-memory write");
        }
        let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        out.push_str(&self.plateau_summary());
        out
    }

    pub fn plateau_summary(&self) -> String {
        let mut out = format!("# plateaus (users = {})\n", self.user_count);
        for (cc, plateaus) in &self.plateaus {
            if plateaus.is_empty() {
                let _ = writeln!(out, "# cc_weight={cc} none");
            }
            for p in plateaus {
                let _ = writeln!(
                    out,
                    "# cc_weight={cc} d_max=[{}, {}] clusters={}",
                    p.d_max_start, p.d_max_end, p.cluster_count
                );
            }
        }
        out
    }
}

/// Maximal runs of at least two consecutive points with the same count,
/// keeping only counts strictly between 1 and `user_count`.
pub fn find_plateau(curve: &[(f64, usize)], user_count: usize) -> Vec<Plateau> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < curve.len() {
        let count = curve[start].1;
        let mut end = start;
        while end + 1 < curve.len() && curve[end + 1].1 == count {
            end += 1;
        }
        if end > start && count > 1 && count < user_count {
            out.push(Plateau {
                d_max_start: curve[start].0,
                d_max_end: curve[end].0,
                cluster_count: count,
            });
        }
        start = end + 1;
    }
    out
}

/// Cluster count at every grid point. The graph and distance table are built
/// once per cc_weight; similarity reports in `profiles` are reused as is.
pub fn run_sweep(
    profiles: &[UserProfile],
    ontology: &Ontology,
    grid: &SweepGrid,
) -> Result<SweepResult, SweepError> {
    grid.validate()?;
    let per_cc: Vec<Result<Vec<SweepRow>, SweepError>> = grid
        .cc_weight_values
        .par_iter()
        .map(|&cc| {
            let params = GraphParams::new(cc, grid.ca_weight, grid.epsilon)?;
            let g0 = build_user_ontology_graph(profiles, ontology, &params)?;
            let g2 = all_pairs_user_distances(&g0);
            grid.d_max_values
                .par_iter()
                .map(|&d_max| {
                    Ok(SweepRow {
                        cc_weight: cc,
                        d_max,
                        cluster_count: cluster_users(&g2, d_max)?.cluster_count(),
                    })
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_cc {
        rows.extend(r?);
    }
    let user_count = profiles.len();
    let mut result = SweepResult {
        user_count,
        rows,
        plateaus: Vec::new(),
    };
    result.plateaus = grid
        .cc_weight_values
        .iter()
        .map(|&cc| (cc, find_plateau(&result.curve(cc), user_count)))
        .collect();
    Ok(result)
}
