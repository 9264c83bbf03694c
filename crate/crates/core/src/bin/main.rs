use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use veristruct::corpus::{self, CorpusFormat, IngestOptions};
use veristruct::eval::{self, EvalOptions};
use veristruct::inference::{backend_from_spec, Client, ENV_ENDPOINT, ENV_MODEL};
use veristruct::pipeline::{self, PipelineConfig, PipelineError};
use veristruct::prompt::{TemplateKind, TemplateSet};
use veristruct::{audit, AuditPolicy, Error, ParseOptions};

#[derive(Parser)]
#[command(
    name = "veristruct",
    version,
    about = "Structured reasoning chains for claim verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a HOVER or FEVEROUS-S release file to canonical JSONL.
    Ingest {
        #[arg(long, default_value = "hover")]
        format: CorpusFormat,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only claims with this many hops.
        #[arg(long)]
        hops: Option<u32>,
    },
    /// Print dataset statistics.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "canonical")]
        format: CorpusFormat,
        #[arg(long)]
        hops: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Validate hand-annotated chains and write warm-up training pairs.
    WarmupExport {
        #[arg(long)]
        annotated: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Run the generate/select loop and write per-round ledgers and training files.
    Selfimprove(SelfimproveArgs),
    /// Score a model on a labeled corpus.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "structured")]
        mode: TemplateKind,
        /// `http(s)://` base URL or `scripted:<file>`; defaults to $VERISTRUCT_ENDPOINT.
        #[arg(long)]
        endpoint: Option<String>,
        /// Annotated records used as in-context examples (few-shot modes).
        #[arg(long)]
        exemplars: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Model name sent to the endpoint; defaults to $VERISTRUCT_MODEL.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Accept list markers and bold keywords when parsing chains.
        #[arg(long)]
        lenient: bool,
        /// Write the full report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit chains against their evidence.
    Audit {
        /// JSONL with `id` and `chain` per line; `evidence` may be inline.
        #[arg(long)]
        chains: PathBuf,
        /// Canonical corpus supplying evidence by id.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SelfimproveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    annotated: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Endpoint per round, replacing the configured list.
    #[arg(long = "endpoint")]
    endpoints: Vec<String>,
    /// Continue from checkpoint journals.
    #[arg(long)]
    resume: bool,
    /// Validate inputs and render prompts without generating.
    #[arg(long)]
    dry_run: bool,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Model(_) | Error::Parse(_) | Error::Prompt(_) | Error::Corpus(_) => 2,
        Error::Pipeline(p) => match p {
            PipelineError::Config(_)
            | PipelineError::Corpus(_)
            | PipelineError::Prompt(_)
            | PipelineError::MissingLabel(_)
            | PipelineError::InvalidAnnotatedChain { .. }
            | PipelineError::MissingEndpointForRound(_) => 2,
            _ => 1,
        },
        Error::Inference(veristruct::inference::InferenceError::Config(_)) => 2,
        Error::Eval(eval::EvalError::Inference { .. }) | Error::Inference(_) => 1,
        Error::Eval(_) => 2,
    }
}

fn templates(path: Option<&Path>) -> Result<TemplateSet, Error> {
    let set = TemplateSet::default();
    Ok(match path {
        Some(p) => set.with_overrides_file(p)?,
        None => set,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| {
        PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        }
        .into()
    })
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Ingest {
            format,
            input,
            out,
            hops,
        } => {
            let records = corpus::ingest(&input, format, IngestOptions { hops })?;
            corpus::write_canonical(&out, &records)?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Stats {
            input,
            format,
            hops,
            json,
        } => {
            let records = corpus::ingest(&input, format, IngestOptions { hops })?;
            let s = corpus::stats(&records)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&s).expect("stats serialize"));
            } else {
                print!("{}", s.to_table());
            }
        }
        Command::WarmupExport {
            annotated,
            out,
            templates: tpl,
        } => {
            let annotated = corpus::load_annotated(&annotated)?;
            let export = pipeline::export_warmup(&annotated, &templates(tpl.as_deref())?, &Default::default())?;
            write_text(&out, &pipeline::training_jsonl(&export.pairs))?;
            eprintln!("wrote {} warm-up pairs to {}", export.pairs.len(), out.display());
        }
        Command::Selfimprove(args) => return selfimprove(args),
        Command::Evaluate {
            corpus: corpus_path,
            mode,
            endpoint,
            exemplars,
            templates: tpl,
            model,
            concurrency,
            lenient,
            out,
        } => {
            let records = corpus::ingest(&corpus_path, CorpusFormat::Canonical, IngestOptions::default())?;
            let exemplars = exemplars.map(|p| corpus::load_annotated(&p)).transpose()?;
            let spec = endpoint
                .or_else(|| std::env::var(ENV_ENDPOINT).ok())
                .ok_or_else(|| PipelineError::Config(format!("no --endpoint and ${ENV_ENDPOINT} unset")))?;
            let client = Client::new(backend_from_spec(&spec)?).with_concurrency(concurrency.max(1));
            let opts = EvalOptions {
                mode,
                model_name: model
                    .or_else(|| std::env::var(ENV_MODEL).ok())
                    .unwrap_or_else(|| "default".into()),
                parse: if lenient {
                    ParseOptions::lenient()
                } else {
                    ParseOptions::strict()
                },
                ..EvalOptions::default()
            };
            let report = eval::evaluate(
                &records,
                &client,
                &templates(tpl.as_deref())?,
                exemplars.as_deref(),
                &opts,
            )?;
            print!("{}", report.to_table());
            if let Some(out) = out {
                write_text(&out, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
            }
        }
        Command::Audit {
            chains,
            corpus: corpus_path,
            config,
        } => return audit_chains(&chains, corpus_path.as_deref(), config.as_deref()),
    }
    Ok(0)
}

fn selfimprove(args: SelfimproveArgs) -> Result<u8, Error> {
    let mut config = match &args.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = args.corpus {
        config.corpus = Some(c);
    }
    if let Some(a) = args.annotated {
        config.annotated = Some(a);
    }
    if let Some(o) = args.out_dir {
        config.out_dir = o;
    }
    if !args.endpoints.is_empty() {
        config.endpoints = args.endpoints;
    }
    let corpus_path = config
        .corpus
        .clone()
        .ok_or_else(|| PipelineError::Config("no corpus given".into()))?;
    let records = corpus::ingest(&corpus_path, CorpusFormat::Canonical, IngestOptions::default())?;
    let annotated = match &config.annotated {
        Some(p) => corpus::load_annotated(p)?,
        None => Vec::new(),
    };
    let tpl = templates(config.templates.as_deref())?;
    if let Some(round) = (1..=config.rounds).find(|&r| config.endpoints.len() < r as usize) {
        if !args.dry_run {
            return Err(PipelineError::MissingEndpointForRound(round).into());
        }
    }

    if args.dry_run {
        let warm = pipeline::export_warmup(&annotated, &tpl, &config.warmup)?;
        for r in &records {
            if r.gold.is_none() {
                return Err(PipelineError::MissingLabel(r.id.clone()).into());
            }
            tpl.render(TemplateKind::Structured, r, None)?;
            tpl.render_hinted(r)?;
        }
        println!(
            "dry run ok: {} corpus records, {} annotated chains, {} round(s), {} endpoint(s) configured",
            records.len(),
            warm.pairs.len(),
            config.rounds,
            config.endpoints.len()
        );
        return Ok(0);
    }

    let artifacts = pipeline::run(
        &config,
        &records,
        &annotated,
        &tpl,
        pipeline::endpoint_clients(&config),
        args.resume,
    )?;
    for a in &artifacts {
        let c = a.output.ledger.counts();
        println!(
            "round {}: d1={} d2={} rejected_wrong={} rejected_format={} pairs={} -> {}",
            a.round,
            c.d1,
            c.d2,
            c.rejected_wrong,
            c.rejected_format,
            a.output.pairs.len(),
            a.training_path.display()
        );
    }
    Ok(0)
}

fn audit_chains(chains: &Path, corpus_path: Option<&Path>, config: Option<&Path>) -> Result<u8, Error> {
    let policy = match config {
        Some(p) => PipelineConfig::from_file(p)?.audit,
        None => AuditPolicy::default(),
    };
    let evidence_counts: HashMap<String, usize> = match corpus_path {
        Some(p) => corpus::ingest(p, CorpusFormat::Canonical, IngestOptions::default())?
            .into_iter()
            .map(|r| (r.id, r.evidence.len()))
            .collect(),
        None => HashMap::new(),
    };
    let text = std::fs::read_to_string(chains).map_err(|e| PipelineError::Io {
        path: chains.display().to_string(),
        source: e,
    })?;
    let schema = |line: usize, detail: String| Error::Corpus(corpus::CorpusError::SchemaError { line, detail });
    let mut failed = 0;
    let mut total = 0;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| schema(i + 1, e.to_string()))?;
        let id = v["id"]
            .as_str()
            .ok_or_else(|| schema(i + 1, "missing string field \"id\"".into()))?;
        let chain = v["chain"]
            .as_str()
            .ok_or_else(|| schema(i + 1, "missing string field \"chain\"".into()))?;
        let n = match v["evidence"].as_array() {
            Some(ev) => ev.len(),
            None => *evidence_counts
                .get(id)
                .ok_or_else(|| schema(i + 1, format!("no evidence for {id:?}")))?,
        };
        let report = audit(chain, n, &policy);
        total += 1;
        if report.passed {
            println!("{id}\tPASS");
        } else {
            failed += 1;
            for v in &report.violations {
                let block = v.block.map(|b| format!("C{b} ")).unwrap_or_default();
                println!("{id}\tFAIL\t{:?}\t{block}{}", v.criterion, v.detail);
            }
        }
    }
    eprintln!("{} of {total} chains pass", total - failed);
    Ok(if failed > 0 { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
