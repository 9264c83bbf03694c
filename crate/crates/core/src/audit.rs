//! Structural checks applied to a generated chain before it may be used as
//! training data.
//!
//! Three criteria are checked:
//! - segmentation: sequential `C1..Ck` blocks, each closed by a `Status:` line
//!   and carrying a `Verification:` step;
//! - grounding: citations point at existing evidence and only at earlier
//!   subclaims, and (per policy) steps actually cite something;
//! - format: keyword steps in grammar order with a single final
//!   `Verification:` and a canonical status.

use serde::{Deserialize, Serialize};

use crate::chain::{parse_chain_with, CitationKind, ParseError, ParseOptions, ReasoningChain, StepKind};

/// Which parts of the structured format are enforced. The default enforces
/// everything; each flag can be relaxed on its own for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditPolicy {
    /// Require explicit `C<i>:` subclaim blocks.
    pub require_decomposition: bool,
    /// Require each `Entity Resolution:` step to be grounded by a citation,
    /// either in itself or in the `Resolution Verification:` right after it.
    pub require_entity_analysis: bool,
    /// Require every `Verification:` and `Resolution Verification:` step to
    /// cite at least one evidence item or earlier subclaim.
    pub require_grounding: bool,
    /// Canonical keyword spelling only; when false, list and bold markers are
    /// tolerated and the status spelling is not checked.
    pub strict_keywords: bool,
}

impl Default for AuditPolicy {
    fn default() -> Self {
        Self {
            require_decomposition: true,
            require_entity_analysis: true,
            require_grounding: true,
            strict_keywords: true,
        }
    }
}

impl AuditPolicy {
    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            lenient: !self.strict_keywords,
            allow_undecomposed: !self.require_decomposition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Segmentation,
    Grounding,
    Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub criterion: Criterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, criterion: Criterion) -> bool {
        self.violations.iter().any(|v| v.criterion == criterion)
    }
}

fn parse_violation(err: &ParseError) -> Violation {
    let criterion = match err {
        ParseError::StrayContent { .. } => Criterion::Format,
        _ => Criterion::Segmentation,
    };
    Violation {
        criterion,
        block: err.block(),
        detail: err.to_string(),
    }
}

/// Audits raw chain text. Failures are reported, never raised.
pub fn audit(chain_text: &str, evidence_count: usize, policy: &AuditPolicy) -> AuditReport {
    audit_with_chain(chain_text, evidence_count, policy).0
}

/// Like [`audit`], also returning the parsed chain when parsing succeeded.
pub fn audit_with_chain(
    chain_text: &str,
    evidence_count: usize,
    policy: &AuditPolicy,
) -> (AuditReport, Option<ReasoningChain>) {
    match parse_chain_with(chain_text, policy.parse_options()) {
        Ok(chain) => (audit_parsed(&chain, evidence_count, policy), Some(chain)),
        Err(e) => (AuditReport::from_violations(vec![parse_violation(&e)]), None),
    }
}

/// Audits an already parsed chain.
pub fn audit_parsed(chain: &ReasoningChain, evidence_count: usize, policy: &AuditPolicy) -> AuditReport {
    let mut out = Vec::new();
    let mut push = |criterion, block: u32, detail: String| {
        out.push(Violation {
            criterion,
            block: Some(block),
            detail,
        })
    };

    for block in &chain.blocks {
        let i = block.index;

        if chain.decomposed && block.subclaim_text.trim().is_empty() {
            push(Criterion::Segmentation, i, format!("C{i} has no subclaim text"));
        }

        // Referential validity of every citation in the block.
        let cited = block
            .subclaim_citations
            .iter()
            .chain(block.steps.iter().flat_map(|s| s.citations.iter()));
        for c in cited {
            match c.kind {
                CitationKind::Evidence => {
                    if c.index == 0 || c.index as usize > evidence_count {
                        push(
                            Criterion::Grounding,
                            i,
                            format!("cites E{} but only {evidence_count} evidence items exist", c.index),
                        );
                    }
                }
                CitationKind::Subclaim => {
                    if c.index == 0 || c.index >= i {
                        push(
                            Criterion::Grounding,
                            i,
                            format!("C{i} cites C{}, which is not an earlier subclaim", c.index),
                        );
                    }
                }
            }
        }

        for (pos, step) in block.steps.iter().enumerate() {
            let keyword = step.kind.keyword();
            if step.text.trim().is_empty() {
                push(Criterion::Format, i, format!("empty {keyword} step"));
            }
            match step.kind {
                StepKind::Verification | StepKind::ResolutionVerification
                    if policy.require_grounding && step.citations.is_empty() =>
                {
                    push(Criterion::Grounding, i, format!("{keyword} step cites nothing"));
                }
                StepKind::EntityResolution if policy.require_entity_analysis => {
                    let follow_up_cites = block.steps.get(pos + 1).is_some_and(|next| {
                        next.kind == StepKind::ResolutionVerification && !next.citations.is_empty()
                    });
                    if step.citations.is_empty() && !follow_up_cites {
                        push(
                            Criterion::Grounding,
                            i,
                            "Entity Resolution is not grounded by any citation".to_string(),
                        );
                    }
                }
                _ => {}
            }
        }

        let verifications = block.steps.iter().filter(|s| s.kind == StepKind::Verification).count();
        if verifications > 1 {
            push(
                Criterion::Format,
                i,
                format!("{verifications} Verification steps, expected exactly one"),
            );
        }
        if block.steps.last().map(|s| s.kind) != Some(StepKind::Verification) {
            push(
                Criterion::Format,
                i,
                "Verification must be the last step before Status".to_string(),
            );
        }
        if policy.strict_keywords {
            let canonical = format!("{}.", block.status);
            if block.status_text != canonical {
                push(
                    Criterion::Format,
                    i,
                    format!("status {:?} is not in canonical form {canonical:?}", block.status_text),
                );
            }
        }
    }

    AuditReport::from_violations(out)
}

/// Pass/fail structural check under the full default policy.
pub fn passes_format_check(chain_text: &str, evidence_count: usize) -> bool {
    audit(chain_text, evidence_count, &AuditPolicy::default()).passed
}
