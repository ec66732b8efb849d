//! Append-only request log (one JSON record per line) and the grouping of
//! its records into user profiles.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UserProfile;
use crate::report::SimilarityReport;
use crate::similarity::Matcher;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid record `{request_id}`: {message}")]
    Invalid { request_id: String, message: String },
    #[error("request id `{0}` already exists")]
    Duplicate(String),
}

/// A similarity report cached with the version of the ontology it was
/// computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedReport {
    pub ontology_version: String,
    pub report: SimilarityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestRecord {
    pub request_id: String,
    pub user_id: String,
    /// RFC 3339 timestamp, kept verbatim.
    pub timestamp: String,
    #[serde(default = "default_language")]
    pub language: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CachedReport>,
}

fn default_language() -> String {
    "en".to_string()
}

impl RequestRecord {
    pub fn validate(&self) -> Result<(), StoreError> {
        let invalid = |message: &str| StoreError::Invalid {
            request_id: self.request_id.clone(),
            message: message.to_string(),
        };
        if self.request_id.is_empty() {
            return Err(invalid("request_id is empty"));
        }
        if self.user_id.is_empty() {
            return Err(invalid("user_id is empty"));
        }
        if self.text.trim().is_empty() {
            return Err(invalid("text is empty"));
        }
        if self.language.is_empty() {
            return Err(invalid("language is empty"));
        }
        DateTime::parse_from_rfc3339(&self.timestamp)
            .map_err(|e| invalid(&format!("timestamp `{}`: {e}", self.timestamp)))?;
        Ok(())
    }

    fn sort_key(&self) -> (i64, u32, &str) {
        let t = DateTime::parse_from_rfc3339(&self.timestamp).expect("validated timestamp");
        (t.timestamp(), t.timestamp_subsec_nanos(), &self.request_id)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Parses a request log. Records are validated and request ids must be
/// unique; blank lines are ignored. Order is preserved.
pub fn parse_request_log(text: &str, path: &str) -> Result<Vec<RequestRecord>, StoreError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: RequestRecord =
            serde_json::from_str(line).map_err(|e| StoreError::Malformed {
                path: path.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        record.validate().map_err(|e| StoreError::Malformed {
            path: path.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.request_id.clone()) {
            return Err(StoreError::Malformed {
                path: path.to_string(),
                line: i + 1,
                message: format!("duplicate request id `{}`", record.request_id),
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn to_jsonl(records: &[RequestRecord]) -> String {
    records
        .iter()
        .map(|r| r.to_json_line() + "\n")
        .collect()
}

/// Sorts records by timestamp, then request id.
pub fn sort_by_time(records: &mut [RequestRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// A request log file. Writes go through [`RequestLog::append`] only.
#[derive(Debug)]
pub struct RequestLog {
    path: PathBuf,
    ids: HashSet<String>,
}

impl RequestLog {
    /// Opens a log, creating an empty one if the file does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let ids = if path.exists() {
            read_log(&path)?.into_iter().map(|r| r.request_id).collect()
        } else {
            File::create(&path).map_err(|source| io_error(&path, source))?;
            HashSet::new()
        };
        Ok(RequestLog { path, ids })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn append(&mut self, record: &RequestRecord) -> Result<(), StoreError> {
        record.validate()?;
        if self.ids.contains(&record.request_id) {
            return Err(StoreError::Duplicate(record.request_id.clone()));
        }
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|source| io_error(&self.path, source))?;
        writeln!(file, "{}", record.to_json_line())
            .and_then(|_| file.sync_data())
            .map_err(|source| io_error(&self.path, source))?;
        self.ids.insert(record.request_id.clone());
        Ok(())
    }

    /// All records, in timestamp order.
    pub fn records(&self) -> Result<Vec<RequestRecord>, StoreError> {
        let mut records = read_log(&self.path)?;
        sort_by_time(&mut records);
        Ok(records)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_log(path: &Path) -> Result<Vec<RequestRecord>, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| io_error(path, source))?;
    parse_request_log(&text, &path.display().to_string())
}

/// Reads a personal-data file: a JSON object mapping user id to an object of
/// string fields.
pub fn read_personal(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, String>>, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| io_error(path, source))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Malformed {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Report for a record: the cached one if it was computed against the
/// matcher's ontology, otherwise a fresh one.
pub fn report_for(record: &RequestRecord, matcher: &Matcher<'_>, version: &str) -> SimilarityReport {
    match &record.report {
        Some(cached) if cached.ontology_version == version => cached.report.clone(),
        Some(_) => {
            log::info!(
                "request `{}`: cached report is for another ontology version, recomputing",
                record.request_id
            );
            matcher.match_request(&record.request_id, &record.text)
        }
        None => matcher.match_request(&record.request_id, &record.text),
    }
}

/// Groups records by user, in user-id order, with each user's reports in
/// timestamp order.
pub fn load_profiles(
    records: &[RequestRecord],
    personal: &BTreeMap<String, BTreeMap<String, String>>,
    matcher: &Matcher<'_>,
) -> Vec<UserProfile> {
    let version = matcher.ontology().version();
    let mut sorted = records.to_vec();
    sort_by_time(&mut sorted);
    let mut by_user: BTreeMap<&str, Vec<SimilarityReport>> = BTreeMap::new();
    for record in &sorted {
        by_user
            .entry(&record.user_id)
            .or_default()
            .push(report_for(record, matcher, &version));
    }
    by_user
        .into_iter()
        .map(|(user, reports)| UserProfile {
            user_id: user.to_string(),
            personal: personal.get(user).cloned().unwrap_or_default(),
            reports,
        })
        .collect()
}

/// One pseudo-user per request, so requests themselves are clustered. The
/// profile id is the request id and its label the request text.
pub fn request_profiles(records: &[RequestRecord], matcher: &Matcher<'_>) -> Vec<UserProfile> {
    let version = matcher.ontology().version();
    let mut sorted = records.to_vec();
    sort_by_time(&mut sorted);
    sorted
        .iter()
        .map(|record| UserProfile {
            user_id: record.request_id.clone(),
            personal: BTreeMap::from([
                ("label".to_string(), record.text.clone()),
                ("user_id".to_string(), record.user_id.clone()),
            ]),
            reports: vec![report_for(record, matcher, &version)],
        })
        .collect()
}
