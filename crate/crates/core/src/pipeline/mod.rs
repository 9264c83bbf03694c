//! Self-improvement data selection.
//!
//! One round: generate a structured chain for every training example with the
//! current model, keep chains whose judged verdict matches the gold label
//! (D1), regenerate the misses once with a label hint and keep those that now
//! match (D2), drop anything that fails the structure audit, and emit the
//! survivors together with the hand-annotated pairs as a training file.
//! Fine-tuning happens outside this crate; later rounds point at the
//! endpoint serving the model trained on the previous round's file.

mod config;
mod journal;
mod ledger;

pub use config::{GenerationConfig, PipelineConfig, WarmupConfig};
pub use journal::{Generated, Journal, JournalKey, Stage};
pub use ledger::{
    Bucket, BucketCounts, LedgerEntry, LedgerHeader, LedgerLine, PairSource, SelectionLedger, TrainingPair,
};

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::audit::{audit, AuditPolicy, AuditReport};
use crate::chain::parse_chain_with;
use crate::corpus::{sample_stratified, CorpusError};
use crate::inference::{
    backend_from_spec, fingerprint, Client, FinishReason, GenerationRequest, HttpBackend, InferenceError, ENV_API_KEY,
};
use crate::judge::judge;
use crate::model::{AnnotatedRecord, ClaimRecord, Verdict};
use crate::prompt::{PromptError, TemplateKind, TemplateSet, TEMPLATE_VERSION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("record {0:?} has no gold label")]
    MissingLabel(String),
    #[error("annotated record {id:?} fails the structure audit: {}", summarize(report))]
    InvalidAnnotatedChain { id: String, report: AuditReport },
    #[error("{path}: checkpoint line {line} is corrupt (checksum mismatch)")]
    ChecksumMismatch { path: String, line: usize },
    #[error("no endpoint configured for round {0}")]
    MissingEndpointForRound(u32),
}

fn summarize(report: &AuditReport) -> String {
    report
        .violations
        .iter()
        .map(|v| v.detail.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmupExport {
    pub pairs: Vec<TrainingPair>,
    pub warnings: Vec<String>,
}

/// Warns when the annotated set's Refuted share is off the configured mix.
pub fn label_mix_warning(annotated: &[AnnotatedRecord], cfg: &WarmupConfig) -> Option<String> {
    if annotated.is_empty() {
        return None;
    }
    let refuted = annotated
        .iter()
        .filter(|a| a.record.gold == Some(Verdict::Refuted))
        .count();
    let supported = annotated
        .iter()
        .filter(|a| a.record.gold == Some(Verdict::Supported))
        .count();
    let frac = refuted as f64 / annotated.len() as f64;
    ((frac - cfg.expected_refuted_fraction).abs() > cfg.tolerance).then(|| {
        format!(
            "annotated label mix is {refuted} Refuted : {supported} Supported ({:.0}% Refuted), expected about {:.0}%",
            frac * 100.0,
            cfg.expected_refuted_fraction * 100.0
        )
    })
}

/// Turns hand-annotated chains into warm-up training pairs, one per record.
/// Every chain must pass the full structure audit.
pub fn export_warmup(
    annotated: &[AnnotatedRecord],
    templates: &TemplateSet,
    cfg: &WarmupConfig,
) -> Result<WarmupExport, PipelineError> {
    let policy = AuditPolicy::default();
    let mut pairs = Vec::with_capacity(annotated.len());
    for a in annotated {
        let report = audit(&a.chain, a.record.evidence.len(), &policy);
        if !report.passed {
            return Err(PipelineError::InvalidAnnotatedChain {
                id: a.record.id.clone(),
                report,
            });
        }
        pairs.push(TrainingPair {
            id: a.record.id.clone(),
            source: PairSource::Human,
            input: templates.render(TemplateKind::Structured, &a.record, None)?,
            output: a.chain.clone(),
        });
    }
    let warnings: Vec<String> = label_mix_warning(annotated, cfg).into_iter().collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(WarmupExport { pairs, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    pub ledger: SelectionLedger,
    /// Selected pairs in corpus order, then the human pairs.
    pub pairs: Vec<TrainingPair>,
}

type StageResult = Result<Generated, String>;

/// Generates one stage, reusing journaled outcomes. New outcomes are
/// journaled as they arrive; transport failures are not, so they are retried
/// on resume.
fn generate_stage(
    stage: Stage,
    jobs: &[(String, GenerationRequest)],
    client: &Client,
    mut journal: Option<&mut Journal>,
) -> Result<Vec<StageResult>, PipelineError> {
    let keys: Vec<JournalKey> = jobs
        .iter()
        .map(|(id, req)| JournalKey {
            id: id.clone(),
            stage,
            prompt_sha256: fingerprint(&req.prompt),
        })
        .collect();
    let mut out: Vec<Option<StageResult>> = keys
        .iter()
        .map(|k| journal.as_ref().and_then(|j| j.get(k)).cloned().map(Ok))
        .collect();
    let pending: Vec<usize> = (0..jobs.len()).filter(|&i| out[i].is_none()).collect();
    let requests: Vec<GenerationRequest> = pending.iter().map(|&i| jobs[i].1.clone()).collect();

    let to_generated = |r: &Result<crate::inference::GenerationResult, InferenceError>| -> StageResult {
        match r {
            Ok(g) => Ok(Generated {
                text: g.text.clone(),
                complete: g.finish_reason == FinishReason::Stop,
            }),
            Err(InferenceError::Truncated { partial }) => Ok(Generated {
                text: partial.clone(),
                complete: false,
            }),
            Err(e) => Err(e.to_string()),
        }
    };

    let mut write_error = None;
    let results = client.generate_all(&requests, |pi, r| {
        if let (Some(j), Ok(g)) = (journal.as_deref_mut(), to_generated(r)) {
            if write_error.is_none() {
                if let Err(e) = j.append(keys[pending[pi]].clone(), g) {
                    write_error = Some(e);
                }
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    for (pi, r) in results.iter().enumerate() {
        out[pending[pi]] = Some(to_generated(r));
    }
    Ok(out.into_iter().map(|r| r.expect("filled")).collect())
}

fn verdict_of(g: &Generated, policy: &AuditPolicy) -> Option<Verdict> {
    if !g.complete {
        return None;
    }
    parse_chain_with(&g.text, policy.parse_options())
        .ok()
        .map(|c| judge(&c))
}

/// Runs one generation/selection round over `corpus` with `client`.
pub fn run_round(
    config: &PipelineConfig,
    round: u32,
    corpus: &[ClaimRecord],
    annotated: &[AnnotatedRecord],
    client: &Client,
    templates: &TemplateSet,
    mut journal: Option<&mut Journal>,
) -> Result<RoundOutput, PipelineError> {
    config.validate()?;
    let golds = corpus
        .iter()
        .map(|r| r.gold.ok_or_else(|| PipelineError::MissingLabel(r.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let human = export_warmup(annotated, templates, &config.warmup)?.pairs;
    let policy = config.audit;
    let gen = &config.generation;

    let request = |prompt: String, temperature: f64| {
        let mut r = GenerationRequest::new(prompt, gen.model.clone());
        r.temperature = temperature;
        r.max_tokens = gen.max_tokens;
        r
    };

    let initial_prompts = corpus
        .iter()
        .map(|r| templates.render(TemplateKind::Structured, r, None))
        .collect::<Result<Vec<_>, _>>()?;
    let initial_jobs: Vec<(String, GenerationRequest)> = corpus
        .iter()
        .zip(&initial_prompts)
        .map(|(r, p)| (r.id.clone(), request(p.clone(), gen.temperature)))
        .collect();
    let initial = generate_stage(Stage::Initial, &initial_jobs, client, journal.as_deref_mut())?;
    let initial_verdicts: Vec<Option<Verdict>> = initial
        .iter()
        .map(|r| r.as_ref().ok().and_then(|g| verdict_of(g, &policy)))
        .collect();

    // Hint stage: generated chains whose verdict is missing or wrong.
    let needs_hint: Vec<usize> = (0..corpus.len())
        .filter(|&i| config.use_hints && initial[i].is_ok() && initial_verdicts[i] != Some(golds[i]))
        .collect();
    let hint_jobs = needs_hint
        .iter()
        .map(|&i| {
            let prompt = templates.render_hinted(&corpus[i])?;
            Ok((corpus[i].id.clone(), request(prompt, config.hint_temperature())))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let hinted = generate_stage(Stage::Hint, &hint_jobs, client, journal)?;
    let mut hint_results: Vec<Option<StageResult>> = vec![None; corpus.len()];
    for (&i, r) in needs_hint.iter().zip(hinted) {
        hint_results[i] = Some(r);
    }

    let mut entries = Vec::with_capacity(corpus.len());
    let mut selected = Vec::new();
    for (i, rec) in corpus.iter().enumerate() {
        let gold = golds[i];
        let (initial_chain, initial_error) = match &initial[i] {
            Ok(g) => (
                Some(g.text.clone()),
                (!g.complete).then(|| "generation truncated".to_string()),
            ),
            Err(e) => (None, Some(format!("generation failed: {e}"))),
        };
        let initial_verdict = initial_verdicts[i];
        let (hint_chain, hint_verdict, hint_error) = match &hint_results[i] {
            None => (None, None, None),
            Some(Ok(g)) => (
                Some(g.text.clone()),
                verdict_of(g, &policy),
                (!g.complete).then(|| "generation truncated".to_string()),
            ),
            Some(Err(e)) => (None, None, Some(format!("generation failed: {e}"))),
        };

        let candidate = if initial_verdict == Some(gold) {
            initial_chain.clone().map(|c| (PairSource::D1, c))
        } else if hint_verdict == Some(gold) {
            hint_chain.clone().map(|c| (PairSource::D2, c))
        } else {
            None
        };

        let (bucket, audit_report) = match candidate {
            None => (Bucket::RejectedWrong, None),
            Some((source, chain)) => {
                let bucket = if source == PairSource::D1 {
                    Bucket::D1
                } else {
                    Bucket::D2
                };
                if config.use_format_check {
                    let report = audit(&chain, rec.evidence.len(), &policy);
                    if report.passed {
                        selected.push(TrainingPair {
                            id: rec.id.clone(),
                            source,
                            input: initial_prompts[i].clone(),
                            output: chain,
                        });
                        (bucket, Some(report))
                    } else {
                        (Bucket::RejectedFormat, Some(report))
                    }
                } else {
                    selected.push(TrainingPair {
                        id: rec.id.clone(),
                        source,
                        input: initial_prompts[i].clone(),
                        output: chain,
                    });
                    (bucket, None)
                }
            }
        };

        entries.push(LedgerEntry {
            id: rec.id.clone(),
            gold,
            prompt_sha256: fingerprint(&initial_prompts[i]),
            initial_parse_ok: initial_verdict.is_some(),
            initial_chain,
            initial_verdict,
            initial_error,
            hint_chain,
            hint_verdict,
            hint_error,
            bucket,
            audit: audit_report,
        });
    }

    selected.extend(human);
    let header = LedgerHeader {
        round,
        backend: client.describe(),
        template_version: TEMPLATE_VERSION,
        config: serde_json::to_value(config).expect("config serializes"),
    };
    Ok(RoundOutput {
        ledger: SelectionLedger { header, entries },
        pairs: selected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundArtifacts {
    pub round: u32,
    pub ledger_path: PathBuf,
    pub training_path: PathBuf,
    pub output: RoundOutput,
}

pub fn round_dir(out_dir: &Path, round: u32) -> PathBuf {
    out_dir.join(format!("round-{round}"))
}

pub fn journal_path(checkpoint_dir: &Path, round: u32) -> PathBuf {
    checkpoint_dir.join(format!("round-{round}.journal.jsonl"))
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    let io = |e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

pub fn training_jsonl(pairs: &[TrainingPair]) -> String {
    pairs
        .iter()
        .map(|p| serde_json::to_string(p).expect("pair serializes") + "\n")
        .collect()
}

/// Runs every configured round. `client_for_round` supplies the model for
/// each round (1-based); between rounds the training file of the finished
/// round is already on disk for the external trainer.
pub fn run<F>(
    config: &PipelineConfig,
    corpus: &[ClaimRecord],
    annotated: &[AnnotatedRecord],
    templates: &TemplateSet,
    mut client_for_round: F,
    resume: bool,
) -> Result<Vec<RoundArtifacts>, PipelineError>
where
    F: FnMut(u32) -> Result<Client, PipelineError>,
{
    config.validate()?;
    let sampled;
    let corpus = match config.sample_size {
        Some(n) => {
            sampled = sample_stratified(corpus, n, config.sample_seed);
            &sampled[..]
        }
        None => corpus,
    };

    let mut artifacts = Vec::new();
    for round in 1..=config.rounds {
        let client = client_for_round(round)?;
        let mut journal = match &config.checkpoint_dir {
            Some(dir) => Some(Journal::open(&journal_path(dir, round), resume)?),
            None => None,
        };
        let output = run_round(config, round, corpus, annotated, &client, templates, journal.as_mut())?;
        let dir = round_dir(&config.out_dir, round);
        let ledger_path = dir.join("ledger.jsonl");
        let training_path = dir.join("training.jsonl");
        write_file(&ledger_path, &output.ledger.to_jsonl())?;
        write_file(&training_path, &training_jsonl(&output.pairs))?;
        let c = output.ledger.counts();
        log::info!(
            "round {round}: d1={} d2={} rejected_wrong={} rejected_format={} -> {}",
            c.d1,
            c.d2,
            c.rejected_wrong,
            c.rejected_format,
            training_path.display()
        );
        if round < config.rounds {
            log::info!(
                "round {round} training file ready; round {} uses the next configured endpoint",
                round + 1
            );
        }
        artifacts.push(RoundArtifacts {
            round,
            ledger_path,
            training_path,
            output,
        });
    }
    Ok(artifacts)
}

/// Client factory over `config.endpoints`, one entry per round. For HTTP
/// endpoints of later rounds it waits up to `endpoint_ready_timeout_secs`
/// for the freshly trained model to come up.
pub fn endpoint_clients(config: &PipelineConfig) -> impl FnMut(u32) -> Result<Client, PipelineError> + '_ {
    move |round| {
        let spec = config
            .endpoints
            .get(round as usize - 1)
            .ok_or(PipelineError::MissingEndpointForRound(round))?;
        if round > 1 && config.endpoint_ready_timeout_secs > 0 && spec.starts_with("http") {
            let key = std::env::var(ENV_API_KEY).ok();
            let probe = HttpBackend::new(spec, key);
            let timeout = Duration::from_secs(config.endpoint_ready_timeout_secs);
            if !probe.wait_until_ready(timeout, Duration::from_secs(5)) {
                return Err(PipelineError::Config(format!(
                    "endpoint {spec} for round {round} not ready after {}s",
                    config.endpoint_ready_timeout_secs
                )));
            }
        }
        let backend = backend_from_spec(spec)?;
        Ok(client_with(config, backend))
    }
}

pub fn client_with(config: &PipelineConfig, backend: Arc<dyn crate::inference::Backend>) -> Client {
    Client::new(backend)
        .with_retry(config.retry.clone())
        .with_concurrency(config.concurrency)
}
