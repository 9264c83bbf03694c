//! Domain types shared across the crate: verdicts, evidence sets, claim records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown verdict: {0:?}")]
    UnknownVerdict(String),
    #[error("evidence index E{index} out of range (evidence set has {len} items)")]
    EvidenceIndexOutOfRange { index: usize, len: usize },
    #[error("evidence set must not be empty")]
    EmptyEvidence,
    #[error("claim text must not be empty")]
    EmptyClaim,
}

/// Binary truth value of a claim or subclaim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Supported,
    Refuted,
}

impl Verdict {
    pub const ALL: [Verdict; 2] = [Verdict::Supported, Verdict::Refuted];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Supported => "Supported",
            Verdict::Refuted => "Refuted",
        }
    }

    /// Upper-case label used by the canonical corpus format.
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Supported => "SUPPORTED",
            Verdict::Refuted => "REFUTED",
        }
    }

    pub fn opposite(self) -> Verdict {
        match self {
            Verdict::Supported => Verdict::Refuted,
            Verdict::Refuted => Verdict::Supported,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_verdict(s)
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_verdict(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a verdict word, ignoring case and any surrounding punctuation or
/// whitespace (`"Supported."`, `"\"Refuted.\""`, `"REFUTED"`).
pub fn parse_verdict(text: &str) -> Result<Verdict, ModelError> {
    let core = text.trim_matches(|c: char| !c.is_alphanumeric());
    if core.eq_ignore_ascii_case("supported") {
        Ok(Verdict::Supported)
    } else if core.eq_ignore_ascii_case("refuted") {
        Ok(Verdict::Refuted)
    } else {
        Err(ModelError::UnknownVerdict(text.to_string()))
    }
}

/// Ordered, non-empty list of evidence texts addressed as `E1..En`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct EvidenceSet(Vec<String>);

impl EvidenceSet {
    pub fn new(items: Vec<String>) -> Result<Self, ModelError> {
        if items.is_empty() {
            return Err(ModelError::EmptyEvidence);
        }
        Ok(Self(items))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based lookup: `get(1)` is `E1`.
    pub fn get(&self, index: usize) -> Result<&str, ModelError> {
        if index == 0 || index > self.0.len() {
            return Err(ModelError::EvidenceIndexOutOfRange {
                index,
                len: self.0.len(),
            });
        }
        Ok(&self.0[index - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for EvidenceSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let items = Vec::<String>::deserialize(deserializer)?;
        EvidenceSet::new(items).map_err(serde::de::Error::custom)
    }
}

/// One dataset example: claim, evidence and (optionally) the gold verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim: String,
    pub evidence: EvidenceSet,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Verdict>,
    /// Hop count for multi-hop corpora; kept as metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_hops: Option<u32>,
}

impl ClaimRecord {
    pub fn new(
        id: impl Into<String>,
        claim: impl Into<String>,
        evidence: EvidenceSet,
        gold: Option<Verdict>,
    ) -> Result<Self, ModelError> {
        let claim = claim.into();
        if claim.trim().is_empty() {
            return Err(ModelError::EmptyClaim);
        }
        Ok(Self {
            id: id.into(),
            claim,
            evidence,
            gold,
            num_hops: None,
        })
    }
}

/// A claim record paired with a hand-written reasoning chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    #[serde(flatten)]
    pub record: ClaimRecord,
    pub chain: String,
}
