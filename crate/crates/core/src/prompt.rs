//! Prompt templates for structured generation, hinted regeneration and the
//! baseline prompting modes.
//!
//! Template text uses `{claim}`, `{evidence}` and (few-shot kinds only)
//! `{exemplars}` slots. Evidence is rendered as `(1)[e1](2)[e2]...`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotatedRecord, ClaimRecord, EvidenceSet, Verdict};

/// Bumped whenever an embedded template text changes.
pub const TEMPLATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{0} prompts need at least one exemplar")]
    MissingExemplars(TemplateKind),
    #[error("record {0:?} has no gold label")]
    MissingGoldLabel(String),
    #[error("template {kind}: unknown slot {{{slot}}}")]
    UnknownSlot { kind: TemplateKind, slot: String },
    #[error("template {kind}: required slot {{{slot}}} missing")]
    MissingSlot { kind: TemplateKind, slot: &'static str },
    #[error("unknown template kind {0:?}")]
    UnknownKind(String),
    #[error("reading template overrides: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing template overrides: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Structured,
    HintSupported,
    HintRefuted,
    ZeroShot,
    ZeroShotCot,
    FewShot,
    FewShotStructured,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 7] = [
        TemplateKind::Structured,
        TemplateKind::HintSupported,
        TemplateKind::HintRefuted,
        TemplateKind::ZeroShot,
        TemplateKind::ZeroShotCot,
        TemplateKind::FewShot,
        TemplateKind::FewShotStructured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Structured => "structured",
            TemplateKind::HintSupported => "hint_supported",
            TemplateKind::HintRefuted => "hint_refuted",
            TemplateKind::ZeroShot => "zero_shot",
            TemplateKind::ZeroShotCot => "zero_shot_cot",
            TemplateKind::FewShot => "few_shot",
            TemplateKind::FewShotStructured => "few_shot_structured",
        }
    }

    pub fn needs_exemplars(self) -> bool {
        matches!(self, TemplateKind::FewShot | TemplateKind::FewShotStructured)
    }

    /// Whether the model is expected to answer with a structured chain.
    pub fn is_structured_chain(self) -> bool {
        matches!(
            self,
            TemplateKind::Structured
                | TemplateKind::HintSupported
                | TemplateKind::HintRefuted
                | TemplateKind::FewShotStructured
        )
    }

    fn embedded(self) -> &'static str {
        match self {
            TemplateKind::Structured => include_str!("../templates/structured.txt"),
            TemplateKind::HintSupported => include_str!("../templates/hint_supported.txt"),
            TemplateKind::HintRefuted => include_str!("../templates/hint_refuted.txt"),
            TemplateKind::ZeroShot => include_str!("../templates/zero_shot.txt"),
            TemplateKind::ZeroShotCot => include_str!("../templates/zero_shot_cot.txt"),
            TemplateKind::FewShot => include_str!("../templates/few_shot.txt"),
            TemplateKind::FewShotStructured => include_str!("../templates/few_shot_structured.txt"),
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| PromptError::UnknownKind(s.to_string()))
    }
}

/// The hinted template matching a gold verdict.
pub fn hint_for(gold: Verdict) -> TemplateKind {
    match gold {
        Verdict::Supported => TemplateKind::HintSupported,
        Verdict::Refuted => TemplateKind::HintRefuted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Claim,
    Evidence,
    Exemplars,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

/// A validated template: every `{slot}` is known and the required ones exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    kind: TemplateKind,
    text: String,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        let pieces = split_slots(kind, &text)?;
        let has = |s: Slot| pieces.contains(&Piece::Slot(s));
        for (slot, name) in [(Slot::Claim, "claim"), (Slot::Evidence, "evidence")] {
            if !has(slot) {
                return Err(PromptError::MissingSlot { kind, slot: name });
            }
        }
        if kind.needs_exemplars() && !has(Slot::Exemplars) {
            return Err(PromptError::MissingSlot {
                kind,
                slot: "exemplars",
            });
        }
        Ok(Self { kind, text, pieces })
    }

    pub fn embedded(kind: TemplateKind) -> Self {
        Self::new(kind, kind.embedded()).expect("embedded templates are valid")
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn split_slots(kind: TemplateKind, text: &str) -> Result<Vec<Piece>, PromptError> {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        let is_slot = name_len > 0 && after[name_len..].starts_with('}');
        if !is_slot {
            literal.push_str(&rest[..=open]);
            rest = after;
            continue;
        }
        let name = &after[..name_len];
        let slot = match name {
            "claim" => Slot::Claim,
            "evidence" => Slot::Evidence,
            "exemplars" => Slot::Exemplars,
            other => {
                return Err(PromptError::UnknownSlot {
                    kind,
                    slot: other.to_string(),
                })
            }
        };
        literal.push_str(&rest[..open]);
        if !literal.is_empty() {
            pieces.push(Piece::Text(std::mem::take(&mut literal)));
        }
        pieces.push(Piece::Slot(slot));
        rest = &after[name_len + 1..];
    }
    literal.push_str(rest);
    if !literal.is_empty() {
        pieces.push(Piece::Text(literal));
    }
    Ok(pieces)
}

/// `(1)[e1](2)[e2]...`
pub fn render_evidence(evidence: &EvidenceSet) -> String {
    evidence
        .iter()
        .enumerate()
        .map(|(i, e)| format!("({})[{}]", i + 1, e))
        .collect()
}

fn render_exemplar(kind: TemplateKind, ex: &AnnotatedRecord) -> Result<String, PromptError> {
    let rec = &ex.record;
    let head = format!("Claim: {}\nEvidence: {}", rec.claim, render_evidence(&rec.evidence));
    Ok(match kind {
        TemplateKind::FewShotStructured => format!("{head}\nChain: {}", ex.chain.trim()),
        _ => {
            let gold = rec.gold.ok_or_else(|| PromptError::MissingGoldLabel(rec.id.clone()))?;
            format!("{head}\nOutput: {gold}")
        }
    })
}

/// Fills a template for one record. Exemplars are used, in the given order,
/// only by the few-shot kinds, which require at least one.
pub fn render(
    template: &PromptTemplate,
    record: &ClaimRecord,
    exemplars: Option<&[AnnotatedRecord]>,
) -> Result<String, PromptError> {
    let kind = template.kind;
    let exemplar_text = if kind.needs_exemplars() {
        let exs = exemplars
            .filter(|e| !e.is_empty())
            .ok_or(PromptError::MissingExemplars(kind))?;
        let parts = exs
            .iter()
            .map(|e| render_exemplar(kind, e))
            .collect::<Result<Vec<_>, _>>()?;
        parts.join("\n\n")
    } else {
        String::new()
    };
    let evidence = render_evidence(&record.evidence);
    let mut out = String::with_capacity(template.text.len() + record.claim.len() + evidence.len());
    for piece in &template.pieces {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(Slot::Claim) => out.push_str(&record.claim),
            Piece::Slot(Slot::Evidence) => out.push_str(&evidence),
            Piece::Slot(Slot::Exemplars) => out.push_str(&exemplar_text),
        }
    }
    Ok(out)
}

/// The full set of templates, embedded defaults plus optional overrides.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateKind, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            templates: TemplateKind::ALL
                .into_iter()
                .map(|k| (k, PromptTemplate::embedded(k)))
                .collect(),
        }
    }
}

impl TemplateSet {
    pub fn get(&self, kind: TemplateKind) -> &PromptTemplate {
        &self.templates[&kind]
    }

    /// Replaces templates from a TOML table of `kind = "template text"`.
    pub fn with_overrides_str(mut self, toml_text: &str) -> Result<Self, PromptError> {
        let table: BTreeMap<String, String> = toml::from_str(toml_text)?;
        for (key, text) in table {
            let kind: TemplateKind = key.parse()?;
            self.templates.insert(kind, PromptTemplate::new(kind, text)?);
        }
        Ok(self)
    }

    pub fn with_overrides_file(self, path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)?;
        self.with_overrides_str(&text)
    }

    pub fn render(
        &self,
        kind: TemplateKind,
        record: &ClaimRecord,
        exemplars: Option<&[AnnotatedRecord]>,
    ) -> Result<String, PromptError> {
        render(self.get(kind), record, exemplars)
    }

    /// Structured prompt with the hint line chosen by the record's gold label.
    pub fn render_hinted(&self, record: &ClaimRecord) -> Result<String, PromptError> {
        let gold = record
            .gold
            .ok_or_else(|| PromptError::MissingGoldLabel(record.id.clone()))?;
        self.render(hint_for(gold), record, None)
    }
}
