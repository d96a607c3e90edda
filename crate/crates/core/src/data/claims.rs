//! FEVER-style claim records and their JSONL encoding.
//!
//! One JSON object per line:
//!
//! ```json
//! {"id": 7, "claim": "...", "label": "SUPPORTS",
//!  "candidates": [["Title", 0, "sentence text"]],
//!  "evidence": [[["Title", 0]]]}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "SUPPORTS")]
    Supports,
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NOT ENOUGH INFO", alias = "NEI")]
    NotEnoughInfo,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Supports, Label::Refutes, Label::NotEnoughInfo];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Self::ALL.get(index).copied()
    }

    pub fn requires_evidence(self) -> bool {
        self != Label::NotEnoughInfo
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Supports => "SUPPORTS",
            Label::Refutes => "REFUTES",
            Label::NotEnoughInfo => "NOT ENOUGH INFO",
        })
    }
}

/// `(document title, sentence id)`, serialized as a two-element array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvidenceId(pub String, pub u32);

/// `(document title, sentence id, sentence text)`, serialized as a three-element array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate(pub String, pub u32, pub String);

impl Candidate {
    pub fn id(&self) -> EvidenceId {
        EvidenceId(self.0.clone(), self.1)
    }

    pub fn title(&self) -> &str {
        &self.0
    }

    pub fn text(&self) -> &str {
        &self.2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimInstance {
    pub id: u64,
    pub claim: String,
    pub label: Label,
    /// Retrieved sentences in retriever order.
    #[serde(rename = "candidates")]
    pub evidence_candidates: Vec<Candidate>,
    /// Each group on its own is sufficient evidence.
    #[serde(rename = "evidence", default)]
    pub gold_evidence_groups: Vec<Vec<EvidenceId>>,
}

impl ClaimInstance {
    pub fn validate(&self) -> Result<()> {
        if self.claim.trim().is_empty() {
            return Err(Error::contract(format!("claim {} has empty text", self.id)));
        }
        if self.label.requires_evidence() && self.gold_evidence_groups.is_empty() {
            return Err(Error::contract(format!(
                "claim {} is labelled {} but has no gold evidence group",
                self.id, self.label
            )));
        }
        if self.gold_evidence_groups.iter().any(Vec::is_empty) {
            return Err(Error::contract(format!("claim {} has an empty evidence group", self.id)));
        }
        let mut seen = HashSet::new();
        for c in &self.evidence_candidates {
            if !seen.insert(c.id()) {
                return Err(Error::contract(format!(
                    "claim {} lists candidate ({}, {}) twice",
                    self.id, c.0, c.1
                )));
            }
        }
        Ok(())
    }

    pub fn is_gold(&self, id: &EvidenceId) -> bool {
        self.gold_evidence_groups.iter().flatten().any(|g| g == id)
    }
}

/// Parses JSONL from `reader`; blank lines are skipped, line numbers are 1-based.
pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead, path: &Path) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, value));
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), path)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    fs::write(path, to_jsonl(items)).map_err(|e| Error::io(path, e))
}

pub fn parse_claims(reader: impl BufRead, path: &Path) -> Result<Vec<ClaimInstance>> {
    let rows: Vec<(usize, ClaimInstance)> = parse_jsonl(reader, path)?;
    let mut ids = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, claim) in rows {
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        claim.validate().map_err(|e| fail(e.to_string()))?;
        if !ids.insert(claim.id) {
            return Err(fail(format!("duplicate claim id {}", claim.id)));
        }
        out.push(claim);
    }
    Ok(out)
}

pub fn load_claims(path: &Path) -> Result<Vec<ClaimInstance>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_claims(BufReader::new(file), path)
}

pub fn save_claims(path: &Path, claims: &[ClaimInstance]) -> Result<()> {
    write_jsonl(path, claims)
}

/// Per-label counts in `Label::ALL` order.
pub fn label_histogram(claims: &[ClaimInstance]) -> [usize; 3] {
    let mut h = [0; 3];
    for c in claims {
        h[c.label.index()] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<ClaimInstance>> {
        parse_claims(text.as_bytes(), Path::new("mem.jsonl"))
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn supports_line_roundtrips() {
        let line = r#"{"id":1,"claim":"The sky is blue.","label":"SUPPORTS","candidates":[["Sky",0,"The sky is blue ."],["Sea",3,"The sea is wet ."]],"evidence":[[["Sky",0]]]}"#;
        let parsed = parse(line).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(to_jsonl(&parsed).trim_end(), line);
        assert!(parsed[0].is_gold(&EvidenceId("Sky".into(), 0)));
        assert!(!parsed[0].is_gold(&EvidenceId("Sea".into(), 3)));
    }

    #[test]
    fn nei_alias_is_accepted() {
        let line = r#"{"id":1,"claim":"x","label":"NEI","candidates":[],"evidence":[]}"#;
        assert_eq!(parse(line).unwrap()[0].label, Label::NotEnoughInfo);
    }

    #[test]
    fn unknown_label_reports_line_number() {
        let text = "\n{\"id\":1,\"claim\":\"x\",\"label\":\"MAYBE\",\"candidates\":[],\"evidence\":[]}\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let a = r#"{"id":4,"claim":"x","label":"NOT ENOUGH INFO","candidates":[],"evidence":[]}"#;
        let err = parse(&format!("{a}\n{a}\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn supports_without_evidence_is_rejected() {
        let a = r#"{"id":4,"claim":"x","label":"REFUTES","candidates":[],"evidence":[]}"#;
        assert!(matches!(parse(a).unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_candidate_is_rejected() {
        let a = r#"{"id":4,"claim":"x","label":"NEI","candidates":[["A",1,"a"],["A",1,"b"]],"evidence":[]}"#;
        assert!(parse(a).is_err());
    }
}
