//! Loading HOVER / FEVEROUS-S style releases into canonical records, corpus
//! statistics, and seeded training-subset selection.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{AnnotatedRecord, ClaimRecord, EvidenceSet, Verdict};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("record {line}: {detail}")]
    SchemaError { line: usize, detail: String },
    #[error("record {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {0:?} has no gold label")]
    MissingLabel(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    Hover,
    FeverousS,
    Canonical,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "hover" => Ok(CorpusFormat::Hover),
            "feverous-s" | "feverous" | "feverouss" => Ok(CorpusFormat::FeverousS),
            "canonical" | "jsonl" => Ok(CorpusFormat::Canonical),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Hover => "hover",
            CorpusFormat::FeverousS => "feverous-s",
            CorpusFormat::Canonical => "canonical",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Keep only records with this hop count (HOVER subsets).
    pub hops: Option<u32>,
}

/// Maps release label spellings onto the binary verdict.
pub fn parse_label(label: &str) -> Option<Verdict> {
    let norm: String = label
        .trim()
        .to_ascii_uppercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect();
    match norm.trim_end_matches('.') {
        "SUPPORTED" | "SUPPORTS" | "SUPPORT" => Some(Verdict::Supported),
        "REFUTED" | "REFUTES" | "REFUTE" | "NOT_SUPPORTED" => Some(Verdict::Refuted),
        _ => None,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Splits file content into JSON values: a top-level array or JSON lines.
/// Returned positions are 1-based line (JSONL) or element (array) numbers.
fn json_values(text: &str) -> Result<Vec<(usize, Value)>, CorpusError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(trimmed).map_err(|e| CorpusError::SchemaError {
            line: e.line(),
            detail: e.to_string(),
        })?;
        return Ok(values.into_iter().enumerate().map(|(i, v)| (i + 1, v)).collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| CorpusError::SchemaError {
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push((i + 1, v));
    }
    Ok(out)
}

fn string_field(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn evidence_item(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        // [title, text] pairs
        Value::Array(parts) => parts.iter().rev().find_map(|p| p.as_str().map(str::to_string)),
        Value::Object(map) => ["text", "content", "sentence"]
            .iter()
            .find_map(|k| map.get(*k).and_then(Value::as_str).map(str::to_string)),
        _ => None,
    }
}

fn record_from_value(line: usize, v: &Value, format: CorpusFormat) -> Result<Option<ClaimRecord>, CorpusError> {
    let schema = |detail: String| CorpusError::SchemaError { line, detail };
    let obj = v.as_object().ok_or_else(|| schema("expected a JSON object".into()))?;

    let id_keys: &[&str] = match format {
        CorpusFormat::Canonical => &["id"],
        _ => &["id", "uid", "idx"],
    };
    let id = id_keys
        .iter()
        .find_map(|k| obj.get(*k).and_then(string_field))
        .unwrap_or_default();
    let claim = obj.get("claim").and_then(Value::as_str).unwrap_or_default();

    // FEVEROUS releases open with an empty placeholder row.
    if format == CorpusFormat::FeverousS && id.is_empty() && claim.is_empty() {
        return Ok(None);
    }
    if id.is_empty() {
        return Err(schema("missing id".into()));
    }
    if claim.trim().is_empty() {
        return Err(schema(format!("record {id:?}: missing or empty claim")));
    }

    let gold = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => {
            Some(parse_label(s).ok_or_else(|| CorpusError::UnknownLabel { line, label: s.clone() })?)
        }
        Some(other) => return Err(schema(format!("label must be a string, got {other}"))),
    };
    if gold.is_none() && format != CorpusFormat::Canonical {
        return Err(schema(format!("record {id:?}: missing label")));
    }

    let evidence_keys: &[&str] = match format {
        CorpusFormat::Canonical => &["evidence"],
        _ => &["evidence", "gold_evidence", "evidence_text"],
    };
    let single;
    let raw_evidence = match evidence_keys.iter().find_map(|k| obj.get(*k).and_then(Value::as_array)) {
        Some(list) => list,
        // some preprocessed releases concatenate the evidence into one string
        None if format != CorpusFormat::Canonical => {
            let text = evidence_keys
                .iter()
                .find_map(|k| obj.get(*k).filter(|v| v.is_string()))
                .ok_or_else(|| schema(format!("record {id:?}: missing evidence list")))?;
            single = vec![text.clone()];
            &single
        }
        None => return Err(schema(format!("record {id:?}: missing evidence list"))),
    };
    let items = raw_evidence
        .iter()
        .map(|e| {
            let item = if format == CorpusFormat::Canonical {
                e.as_str().map(str::to_string)
            } else {
                evidence_item(e)
            };
            item.ok_or_else(|| schema(format!("record {id:?}: evidence item without text: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let evidence = EvidenceSet::new(items).map_err(|e| schema(format!("record {id:?}: {e}")))?;

    let num_hops = ["num_hops", "hops"]
        .iter()
        .find_map(|k| obj.get(*k).and_then(Value::as_u64))
        .map(|h| h as u32);

    Ok(Some(ClaimRecord {
        id,
        claim: claim.to_string(),
        evidence,
        gold,
        num_hops,
    }))
}

/// Parses corpus text in the given format.
pub fn ingest_str(text: &str, format: CorpusFormat, opts: IngestOptions) -> Result<Vec<ClaimRecord>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, v) in json_values(text)? {
        let Some(rec) = record_from_value(line, &v, format)? else {
            continue;
        };
        if opts.hops.is_some_and(|h| rec.num_hops != Some(h)) {
            continue;
        }
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId(rec.id));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn ingest(path: &Path, format: CorpusFormat, opts: IngestOptions) -> Result<Vec<ClaimRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ingest_str(&text, format, opts)
}

/// Writes records as canonical JSON lines.
pub fn write_canonical(path: &Path, records: &[ClaimRecord]) -> Result<(), CorpusError> {
    write_jsonl(path, records)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads annotated records (canonical fields plus `"chain"`), one per line.
pub fn load_annotated(path: &Path) -> Result<Vec<AnnotatedRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, v) in json_values(&text)? {
        let rec = record_from_value(line, &v, CorpusFormat::Canonical)?.expect("canonical rows are never skipped");
        let chain = v
            .get("chain")
            .and_then(Value::as_str)
            .ok_or_else(|| CorpusError::SchemaError {
                line,
                detail: format!("record {:?}: missing chain", rec.id),
            })?
            .to_string();
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId(rec.id));
        }
        out.push(AnnotatedRecord { record: rec, chain });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub supported: usize,
    pub refuted: usize,
    pub avg_words_claim: f64,
    pub avg_evidence_pieces: f64,
    /// Mean over records of the total word count across all evidence pieces.
    pub avg_words_evidence: f64,
}

fn words(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Word counts split on Unicode whitespace; averages are per record.
pub fn stats(records: &[ClaimRecord]) -> Result<CorpusStats, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let (mut supported, mut refuted) = (0, 0);
    let (mut claim_words, mut pieces, mut evidence_words) = (0usize, 0usize, 0usize);
    for r in records {
        match r.gold {
            Some(Verdict::Supported) => supported += 1,
            Some(Verdict::Refuted) => refuted += 1,
            None => return Err(CorpusError::MissingLabel(r.id.clone())),
        }
        claim_words += words(&r.claim);
        pieces += r.evidence.len();
        evidence_words += r.evidence.iter().map(words).sum::<usize>();
    }
    let n = records.len() as f64;
    Ok(CorpusStats {
        total: records.len(),
        supported,
        refuted,
        avg_words_claim: claim_words as f64 / n,
        avg_evidence_pieces: pieces as f64 / n,
        avg_words_evidence: evidence_words as f64 / n,
    })
}

impl CorpusStats {
    pub fn to_table(&self) -> String {
        let rows = [
            ("Total", self.total.to_string()),
            ("Supported Claims", self.supported.to_string()),
            ("Refuted Claims", self.refuted.to_string()),
            ("Avg. Words in Claim", format!("{:.1}", self.avg_words_claim)),
            ("Avg. Evidence Pieces", format!("{:.1}", self.avg_evidence_pieces)),
            ("Avg. Words in Evidence", format!("{:.1}", self.avg_words_evidence)),
        ];
        rows.iter().map(|(k, v)| format!("{k:<24}{v:>10}\n")).collect()
    }
}

/// Picks `n` records uniformly at random within each gold class, with class
/// sizes proportional to the corpus (largest remainder). The result keeps
/// corpus order. Unlabeled records are never selected.
pub fn sample_stratified(records: &[ClaimRecord], n: usize, seed: u64) -> Vec<ClaimRecord> {
    let labeled: Vec<usize> = (0..records.len()).filter(|&i| records[i].gold.is_some()).collect();
    if n >= labeled.len() {
        return labeled.iter().map(|&i| records[i].clone()).collect();
    }
    let groups: Vec<Vec<usize>> = Verdict::ALL
        .iter()
        .map(|v| {
            labeled
                .iter()
                .copied()
                .filter(|&i| records[i].gold == Some(*v))
                .collect()
        })
        .collect();
    let total = labeled.len();
    let mut quotas: Vec<usize> = groups.iter().map(|g| g.len() * n / total).collect();
    let mut remainders: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .map(|(k, g)| ((g.len() * n) % total, k))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut short = n - quotas.iter().sum::<usize>();
    for (_, k) in remainders {
        if short == 0 {
            break;
        }
        if quotas[k] < groups[k].len() {
            quotas[k] += 1;
            short -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for (group, quota) in groups.into_iter().zip(quotas) {
        let mut g = group;
        g.shuffle(&mut rng);
        picked.extend(g.into_iter().take(quota));
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| records[i].clone()).collect()
}
