//! The structured reasoning-chain text format.
//!
//! A chain is a sequence of subclaim blocks:
//!
//! ```text
//! C1: <subclaim>
//! Entity Resolution: <term> -> <entity> (from E2)
//! Resolution Verification: <check citing E1>
//! Verification: <verdict explanation citing E2>
//! Status: Supported.
//!
//! C2: ...
//! ```
//!
//! Entity steps are optional; every block needs a `Verification:` step and a
//! terminal `Status:` line.

mod citation;
mod parse;

pub use citation::{extract_citations, Citation, CitationKind};
pub use parse::{parse_chain, parse_chain_with, ParseError, ParseOptions};

use serde::{Deserialize, Serialize};

use crate::model::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    EntityResolution,
    ResolutionVerification,
    Verification,
}

impl StepKind {
    pub const ALL: [StepKind; 3] = [
        StepKind::EntityResolution,
        StepKind::ResolutionVerification,
        StepKind::Verification,
    ];

    /// The keyword as written in the chain, without the trailing colon.
    pub fn keyword(self) -> &'static str {
        match self {
            StepKind::EntityResolution => "Entity Resolution",
            StepKind::ResolutionVerification => "Resolution Verification",
            StepKind::Verification => "Verification",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub text: String,
    pub citations: Vec<Citation>,
}

impl Step {
    pub fn new(kind: StepKind, text: impl Into<String>) -> Self {
        let text = text.into();
        let citations = extract_citations(&text);
        Self { kind, text, citations }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclaimBlock {
    /// 1-based block number (`C<index>`).
    pub index: u32,
    pub subclaim_text: String,
    /// Citations appearing in the subclaim line itself.
    pub subclaim_citations: Vec<Citation>,
    pub steps: Vec<Step>,
    pub status: Verdict,
    /// Status line content exactly as written (e.g. `"Supported."`).
    pub status_text: String,
}

impl SubclaimBlock {
    pub fn new(index: u32, subclaim_text: impl Into<String>, steps: Vec<Step>, status: Verdict) -> Self {
        let subclaim_text = subclaim_text.into();
        let subclaim_citations = extract_citations(&subclaim_text);
        Self {
            index,
            subclaim_text,
            subclaim_citations,
            steps,
            status,
            status_text: format!("{status}."),
        }
    }

    pub fn has_step(&self, kind: StepKind) -> bool {
        self.steps.iter().any(|s| s.kind == kind)
    }
}

/// A parsed chain. `raw` keeps the original model text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub blocks: Vec<SubclaimBlock>,
    /// False when the chain had no `C<i>:` headers and was read as a single
    /// implicit block (only allowed by [`ParseOptions::allow_undecomposed`]).
    pub decomposed: bool,
    pub raw: String,
}

impl ReasoningChain {
    pub fn from_blocks(blocks: Vec<SubclaimBlock>) -> Self {
        let mut chain = Self {
            blocks,
            decomposed: true,
            raw: String::new(),
        };
        chain.raw = serialize(&chain);
        chain
    }

    pub fn statuses(&self) -> impl Iterator<Item = Verdict> + '_ {
        self.blocks.iter().map(|b| b.status)
    }
}

fn push_line(out: &mut String, head: &str, body: &str) {
    out.push_str(head);
    if !body.is_empty() {
        out.push(' ');
        out.push_str(body);
    }
    out.push('\n');
}

/// Renders a chain in canonical form: one line per keyword, a blank line
/// between blocks, no trailing newline.
pub fn serialize(chain: &ReasoningChain) -> String {
    let mut blocks = Vec::with_capacity(chain.blocks.len());
    for block in &chain.blocks {
        let mut out = String::new();
        if chain.decomposed {
            push_line(&mut out, &format!("C{}:", block.index), &block.subclaim_text);
        }
        for step in &block.steps {
            push_line(&mut out, &format!("{}:", step.kind.keyword()), &step.text);
        }
        out.push_str("Status: ");
        out.push_str(block.status.as_str());
        out.push('.');
        blocks.push(out);
    }
    blocks.join("\n\n")
}
