//! Structured reasoning chains for claim verification: parsing, judging,
//! structure auditing, prompt rendering, evaluation and the self-improvement
//! data-selection loop.

pub mod audit;
pub mod chain;
pub mod corpus;
pub mod eval;
pub mod inference;
pub mod judge;
pub mod model;
pub mod pipeline;
pub mod prompt;

pub use audit::{audit, passes_format_check, AuditPolicy, AuditReport, Criterion, Violation};
pub use chain::{parse_chain, parse_chain_with, serialize, ParseError, ParseOptions, ReasoningChain};
pub use judge::judge;
pub use model::{AnnotatedRecord, ClaimRecord, EvidenceSet, Verdict};

use thiserror::Error;

/// Any error the library can surface, for callers that do not care which
/// stage failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Parse(#[from] chain::ParseError),
    #[error(transparent)]
    Prompt(#[from] prompt::PromptError),
    #[error(transparent)]
    Inference(#[from] inference::InferenceError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Pipeline(#[from] pipeline::PipelineError),
}
