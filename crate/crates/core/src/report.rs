//! Similarity reports and their XML form.
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <Requests>
//!   <Request id="r1">
//!     <Class><CID>7</CID><CWeight>1.0000</CWeight></Class>
//!     <Attribute><AID>3</AID><AWeight>0.4286</AWeight></Attribute>
//!   </Request>
//! </Requests>
//! ```

use std::fmt::Write as _;

use quick_xml::escape::{escape, unescape};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub id: String,
    pub value: f64,
}

impl Score {
    pub fn new(id: &str, value: f64) -> Self {
        Score {
            id: id.to_string(),
            value,
        }
    }
}

/// Scores of one request against the classes and attributes of an ontology.
/// Zero scores are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub request_id: String,
    pub class_scores: Vec<Score>,
    pub attribute_scores: Vec<Score>,
}

impl SimilarityReport {
    pub fn is_empty(&self) -> bool {
        self.class_scores.is_empty() && self.attribute_scores.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum XmlError {
    #[error("XML syntax error at byte {position}: {message}")]
    Syntax { position: u64, message: String },
    #[error("unexpected XML structure at byte {position}: {message}")]
    Structure { position: u64, message: String },
}

/// Writes reports in the `<Requests>` layout with weights at 4 decimals.
pub fn emit_similarity_xml(reports: &[SimilarityReport]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<Requests>\n");
    for report in reports {
        let _ = writeln!(out, "  <Request id=\"{}\">", escape(report.request_id.as_str()));
        for s in &report.class_scores {
            let _ = writeln!(
                out,
                "    <Class><CID>{}</CID><CWeight>{:.4}</CWeight></Class>",
                escape(s.id.as_str()),
                s.value
            );
        }
        for s in &report.attribute_scores {
            let _ = writeln!(
                out,
                "    <Attribute><AID>{}</AID><AWeight>{:.4}</AWeight></Attribute>",
                escape(s.id.as_str()),
                s.value
            );
        }
        out.push_str("  </Request>\n");
    }
    out.push_str("</Requests>\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Cid,
    CWeight,
    Aid,
    AWeight,
}

/// Parses the output of [`emit_similarity_xml`]. Weights come back at the
/// printed precision.
pub fn parse_similarity_xml(xml: &str) -> Result<Vec<SimilarityReport>, XmlError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut reports = Vec::new();
    let mut current: Option<SimilarityReport> = None;
    let mut field: Option<Field> = None;
    let mut pending_id: Option<String> = None;

    let structure = |pos: u64, message: String| XmlError::Structure {
        position: pos,
        message,
    };

    loop {
        let pos = reader.buffer_position();
        let event = reader.read_event().map_err(|e| XmlError::Syntax {
            position: pos,
            message: e.to_string(),
        })?;
        match event {
            Event::Start(e) => match e.name().as_ref() {
                b"Requests" | b"Class" | b"Attribute" => {}
                b"Request" => {
                    let id = e
                        .try_get_attribute("id")
                        .map_err(|err| structure(pos, err.to_string()))?
                        .ok_or_else(|| structure(pos, "Request without id".into()))?
                        .unescape_value()
                        .map_err(|err| structure(pos, err.to_string()))?
                        .into_owned();
                    current = Some(SimilarityReport {
                        request_id: id,
                        ..Default::default()
                    });
                }
                b"CID" => field = Some(Field::Cid),
                b"CWeight" => field = Some(Field::CWeight),
                b"AID" => field = Some(Field::Aid),
                b"AWeight" => field = Some(Field::AWeight),
                other => {
                    return Err(structure(
                        pos,
                        format!("unknown element <{}>", String::from_utf8_lossy(other)),
                    ))
                }
            },
            Event::Empty(e) if e.name().as_ref() == b"Requests" => {}
            Event::Text(t) => {
                let raw = std::str::from_utf8(t.as_ref())
                    .map_err(|err| structure(pos, err.to_string()))?;
                let text = unescape(raw)
                    .map_err(|err| structure(pos, err.to_string()))?
                    .into_owned();
                let report = current
                    .as_mut()
                    .ok_or_else(|| structure(pos, "text outside <Request>".into()))?;
                match field {
                    Some(Field::Cid) | Some(Field::Aid) => pending_id = Some(text),
                    Some(f @ (Field::CWeight | Field::AWeight)) => {
                        let value: f64 = text
                            .parse()
                            .map_err(|_| structure(pos, format!("bad weight `{text}`")))?;
                        let id = pending_id
                            .take()
                            .ok_or_else(|| structure(pos, "weight without id".into()))?;
                        let list = if f == Field::CWeight {
                            &mut report.class_scores
                        } else {
                            &mut report.attribute_scores
                        };
                        list.push(Score { id, value });
                    }
                    None => return Err(structure(pos, format!("stray text `{text}`"))),
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"Request" => reports.extend(current.take()),
                _ => field = None,
            },
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) => {}
            other => return Err(structure(pos, format!("unexpected event {other:?}"))),
        }
    }
    Ok(reports)
}
