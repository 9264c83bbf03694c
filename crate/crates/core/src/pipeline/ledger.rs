use serde::{Deserialize, Serialize};

use crate::audit::AuditReport;
use crate::model::Verdict;

/// Where a corpus example ended up after selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    /// Initial chain judged to the gold label (and passed the format check).
    D1,
    /// Initial chain wrong or unusable, hinted chain judged to gold (and
    /// passed the format check).
    D2,
    /// No usable chain reached the gold label.
    RejectedWrong,
    /// A chain reached the gold label but failed the format check.
    RejectedFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    Human,
    D1,
    D2,
}

/// Supervised fine-tuning example: rendered structured prompt in, chain out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub id: String,
    pub source: PairSource,
    pub input: String,
    pub output: String,
}

/// Per-example record of every selection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: String,
    pub gold: Verdict,
    pub prompt_sha256: String,
    pub initial_chain: Option<String>,
    pub initial_verdict: Option<Verdict>,
    pub initial_parse_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_error: Option<String>,
    pub hint_chain: Option<String>,
    pub hint_verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint_error: Option<String>,
    pub bucket: Bucket,
    pub audit: Option<AuditReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub round: u32,
    pub backend: String,
    pub template_version: u32,
    /// Fully resolved run configuration.
    pub config: serde_json::Value,
}

/// One line of a ledger file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LedgerLine {
    Header(LedgerHeader),
    Example(LedgerEntry),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionLedger {
    pub header: LedgerHeader,
    pub entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub d1: usize,
    pub d2: usize,
    pub rejected_wrong: usize,
    pub rejected_format: usize,
}

impl BucketCounts {
    pub fn total(&self) -> usize {
        self.d1 + self.d2 + self.rejected_wrong + self.rejected_format
    }
}

impl SelectionLedger {
    pub fn bucket_of(&self, id: &str) -> Option<Bucket> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.bucket)
    }

    pub fn counts(&self) -> BucketCounts {
        let mut c = BucketCounts::default();
        for e in &self.entries {
            match e.bucket {
                Bucket::D1 => c.d1 += 1,
                Bucket::D2 => c.d2 += 1,
                Bucket::RejectedWrong => c.rejected_wrong += 1,
                Bucket::RejectedFormat => c.rejected_format += 1,
            }
        }
        c
    }

    /// JSON lines: the header first, then one line per example.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: LedgerLine| {
            out.push_str(&serde_json::to_string(&line).expect("ledger serializes"));
            out.push('\n');
        };
        push(LedgerLine::Header(self.header.clone()));
        for e in &self.entries {
            push(LedgerLine::Example(e.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut header = None;
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                LedgerLine::Header(h) => header = Some(h),
                LedgerLine::Example(e) => entries.push(e),
            }
        }
        let header = header.ok_or_else(|| serde::de::Error::custom("ledger has no header line"))?;
        Ok(Self { header, entries })
    }
}
