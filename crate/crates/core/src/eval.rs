//! Macro-F1 scoring and the evaluation loop over a model endpoint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{parse_chain_with, ParseOptions};
use crate::inference::{Client, GenerationRequest, InferenceError};
use crate::judge::judge;
use crate::model::{parse_verdict, AnnotatedRecord, ClaimRecord, Verdict};
use crate::prompt::{PromptError, TemplateKind, TemplateSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and predicted label lists differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to evaluate")]
    EmptyCorpus,
    #[error("record {0:?} has no gold label")]
    MissingLabel(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("record {id:?}: {source}")]
    Inference {
        id: String,
        #[source]
        source: InferenceError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// `counts[g][p]`: number of examples with gold `g` predicted as `p`, where
/// index 0 is Supported and 1 is Refuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[usize; 2]; 2],
}

fn idx(v: Verdict) -> usize {
    match v {
        Verdict::Supported => 0,
        Verdict::Refuted => 1,
    }
}

impl Confusion {
    pub fn get(&self, gold: Verdict, pred: Verdict) -> usize {
        self.counts[idx(gold)][idx(pred)]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePrediction {
    pub id: String,
    pub gold: Verdict,
    /// None when the output could not be interpreted.
    pub predicted: Option<Verdict>,
    /// The label used for scoring; the wrong class when `predicted` is None.
    pub scored_as: Verdict,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub supported: ClassMetrics,
    pub refuted: ClassMetrics,
    pub macro_f1: f64,
    pub confusion: Confusion,
    pub unparsed_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<ExamplePrediction>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(c: &Confusion, class: Verdict) -> ClassMetrics {
    let other = class.opposite();
    let tp = c.get(class, class);
    let fp = c.get(other, class);
    let fn_ = c.get(class, other);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

/// Per-class precision/recall/F1 (0/0 taken as 0) and their macro average.
pub fn score(gold: &[Verdict], pred: &[Verdict]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut confusion = Confusion::default();
    for (g, p) in gold.iter().zip(pred) {
        confusion.counts[idx(*g)][idx(*p)] += 1;
    }
    let supported = class_metrics(&confusion, Verdict::Supported);
    let refuted = class_metrics(&confusion, Verdict::Refuted);
    Ok(EvalReport {
        macro_f1: (supported.f1 + refuted.f1) / 2.0,
        supported,
        refuted,
        confusion,
        unparsed_count: 0,
        predictions: Vec::new(),
    })
}

/// Reads the `Answer:` line of a free-form chain-of-thought response.
fn cot_answer(output: &str) -> Option<Verdict> {
    let line = output.lines().rev().find_map(|l| {
        let t = l.trim_start();
        t.strip_prefix("Answer:").map(str::to_ascii_lowercase)
    })?;
    let sup = line.contains("supported");
    let refu = line.contains("refuted");
    match (sup, refu) {
        (true, false) => Some(Verdict::Supported),
        (false, true) => Some(Verdict::Refuted),
        _ => None,
    }
}

/// Interprets a model output under the given prompt mode.
pub fn extract_prediction(mode: TemplateKind, output: &str, parse: ParseOptions) -> Option<Verdict> {
    if mode.is_structured_chain() {
        parse_chain_with(output, parse).ok().map(|c| judge(&c))
    } else if mode == TemplateKind::ZeroShotCot {
        cot_answer(output)
    } else {
        parse_verdict(output).ok()
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub mode: TemplateKind,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parse: ParseOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mode: TemplateKind::Structured,
            model_name: "default".into(),
            temperature: crate::inference::DEFAULT_TEMPERATURE,
            max_tokens: crate::inference::DEFAULT_MAX_TOKENS,
            parse: ParseOptions::strict(),
        }
    }
}

/// Generates for every record and scores the predictions. Unparseable or
/// truncated outputs count as the wrong class; transport failures and
/// endpoint rejections abort the run.
pub fn evaluate(
    records: &[ClaimRecord],
    client: &Client,
    templates: &TemplateSet,
    exemplars: Option<&[AnnotatedRecord]>,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let golds = records
        .iter()
        .map(|r| r.gold.ok_or_else(|| EvalError::MissingLabel(r.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let requests = records
        .iter()
        .map(|r| {
            let prompt = templates.render(opts.mode, r, exemplars)?;
            let mut req = GenerationRequest::new(prompt, opts.model_name.clone());
            req.temperature = opts.temperature;
            req.max_tokens = opts.max_tokens;
            Ok(req)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let results = client.generate_all(&requests, |_, _| {});
    let mut predictions = Vec::with_capacity(records.len());
    for ((rec, gold), result) in records.iter().zip(&golds).zip(results) {
        let output = match result {
            Ok(r) => r.text,
            Err(InferenceError::Truncated { partial }) => {
                predictions.push(ExamplePrediction {
                    id: rec.id.clone(),
                    gold: *gold,
                    predicted: None,
                    scored_as: gold.opposite(),
                    output: partial,
                });
                continue;
            }
            Err(source) => {
                return Err(EvalError::Inference {
                    id: rec.id.clone(),
                    source,
                })
            }
        };
        let predicted = extract_prediction(opts.mode, &output, opts.parse);
        predictions.push(ExamplePrediction {
            id: rec.id.clone(),
            gold: *gold,
            predicted,
            scored_as: predicted.unwrap_or(gold.opposite()),
            output,
        });
    }

    let pred: Vec<Verdict> = predictions.iter().map(|p| p.scored_as).collect();
    let mut report = score(&golds, &pred)?;
    report.unparsed_count = predictions.iter().filter(|p| p.predicted.is_none()).count();
    report.predictions = predictions;
    Ok(report)
}

impl EvalReport {
    /// Aligned plain-text summary.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<10} {:>9} {:>9} {:>9} {:>8}\n",
            "class", "precision", "recall", "f1", "support"
        ));
        for (name, m) in [("Supported", &self.supported), ("Refuted", &self.refuted)] {
            s.push_str(&format!(
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}\n",
                name, m.precision, m.recall, m.f1, m.support
            ));
        }
        s.push_str(&format!("{:<10} {:>29.4}\n", "macro-F1", self.macro_f1));
        s.push_str(&format!(
            "confusion (gold\\pred S/R): S [{}, {}]  R [{}, {}]\n",
            self.confusion.counts[0][0],
            self.confusion.counts[0][1],
            self.confusion.counts[1][0],
            self.confusion.counts[1][1]
        ));
        s.push_str(&format!("unparsed outputs: {}\n", self.unparsed_count));
        s
    }
}
