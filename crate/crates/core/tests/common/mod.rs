#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use veristruct::chain::StepKind;
use veristruct::inference::{Backend, BackendError, Fallback, GenerationRequest, GenerationResult, ScriptedBackend};
use veristruct::pipeline::{Bucket, PipelineConfig};
use veristruct::prompt::{TemplateKind, TemplateSet};
use veristruct::{AnnotatedRecord, ClaimRecord, EvidenceSet, Verdict};

use StepKind::{EntityResolution as ER, ResolutionVerification as RV, Verification as V};
use Verdict::{Refuted as R, Supported as S};

pub struct Block {
    pub steps: &'static [(StepKind, &'static [&'static str])],
    pub status: Verdict,
}

pub struct Fixture {
    pub name: &'static str,
    pub claim: &'static str,
    pub label: Verdict,
    /// Highest evidence index the chain cites; the evidence text itself is
    /// not published with the chains.
    pub evidence_count: usize,
    pub chain: &'static str,
    pub blocks: &'static [Block],
    pub judged: Verdict,
}

impl Fixture {
    pub fn record(&self) -> ClaimRecord {
        let evidence = (1..=self.evidence_count)
            .map(|i| format!("{} evidence piece {i}.", self.name))
            .collect();
        ClaimRecord::new(
            self.name,
            self.claim,
            EvidenceSet::new(evidence).unwrap(),
            Some(self.label),
        )
        .unwrap()
    }

    pub fn annotated(&self) -> AnnotatedRecord {
        AnnotatedRecord {
            record: self.record(),
            chain: self.chain.to_string(),
        }
    }
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "debel-gallery",
        claim: "The artist whose work was displayed in 1974 at Debel Gallery, was closely associated with the Viennese Actionism group, while Howard Zieff was an American television commercial director.",
        label: S,
        evidence_count: 3,
        chain: "C1: The artist whose work was displayed in 1974 at Debel Gallery was closely associated with the Viennese Actionism group.
Entity Resolution: Artist -> Rudolf Schwarzkogler (from E2)
Resolution Verification: E1 confirms Rudolf Schwarzkogler's work was displayed in 1974 at Debel Gallery.
Verification: E2 supports that Rudolf Schwarzkogler was closely associated with the Viennese Actionism group.
Status: Supported.

C2: Howard Zieff was an American television commercial director.
Entity Resolution: Howard Zieff -> Howard B. Zieff (from E3)
Resolution Verification: E3 confirms Howard B. Zieff was an American director, television commercial director, and advertising photographer.
Verification: E3 supports that Howard Zieff was an American television commercial director.
Status: Supported.",
        blocks: &[
            Block {
                steps: &[(ER, &["E2"]), (RV, &["E1"]), (V, &["E2"])],
                status: S,
            },
            Block {
                steps: &[(ER, &["E3"]), (RV, &["E3"]), (V, &["E3"])],
                status: S,
            },
        ],
        judged: S,
    },
    Fixture {
        name: "ben-karlin",
        claim: "Ben Karlin wrote the 2013 episode of the TV show, Netflix, that was directed by the actor who played Kevin Arnold in \"The Wonder Years\"",
        label: R,
        evidence_count: 2,
        chain: "C1: Ben Karlin wrote the 2013 episode of the TV show, Netflix.
Entity Resolution: TV show -> Modern Family (from E1)
Resolution Verification: E1 confirms 'ClosetCon '13' aired in 2013, and E1 also confirms Ben Karlin wrote it.
Verification: E1 supports that Ben Karlin wrote the 2013 episode, but it's clear that the TV show is Modern Family, not Netflix.
Status: Refuted.

C2: The actor who played Kevin Arnold in \"The Wonder Years\" directed the 2013 episode.
Entity Resolution: Actor -> Fred Savage (from E2)
Resolution Verification: E2 confirms Fred Savage played Kevin Arnold in \"The Wonder Years\".
Verification: E2 supports that Fred Savage played Kevin Arnold, but it's clear that he directed the episode in 2013, not that he played Kevin Arnold in 2013.
Status: Refuted.

C3: The TV show was Netflix.
Entity Resolution: TV show -> Modern Family (from E1)
Resolution Verification: E1 confirms 'ClosetCon '13' aired on Modern Family, not Netflix.
Verification: E1 refutes that the TV show was Netflix.
Status: Refuted.",
        blocks: &[
            Block {
                steps: &[(ER, &["E1"]), (RV, &["E1", "E1"]), (V, &["E1"])],
                status: R,
            },
            Block {
                steps: &[(ER, &["E2"]), (RV, &["E2"]), (V, &["E2"])],
                status: R,
            },
            Block {
                steps: &[(ER, &["E1"]), (RV, &["E1"]), (V, &["E1"])],
                status: R,
            },
        ],
        judged: R,
    },
    Fixture {
        name: "shadow-creek",
        claim: "The builder of Shadow Creek Golf Course is an Jewish real estate developer. The builder also owns the Encore hotel and casino in Las Vegas.",
        label: R,
        evidence_count: 3,
        chain: "C1: The builder of Shadow Creek Golf Course is an Jewish real estate developer.
Entity Resolution: Builder of Shadow Creek Golf Course -> Steve Wynn (from E3)
Resolution Verification: E3 confirms Steve Wynn built Shadow Creek Golf Course.
Verification: E3 shows Steve Wynn built Shadow Creek Golf Course, but it doesn't provide any information about his religion. There's no evidence to support the claim that Steve Wynn is Jewish.
Status: Refuted.

C2: The builder also owns the Encore hotel and casino in Las Vegas.
Entity Resolution: Builder -> Steve Wynn (from E3)
Resolution Verification: E3 confirms Steve Wynn built Shadow Creek Golf Course, and E2 confirms Wynn Resorts owns Encore.
Verification: E3 shows Steve Wynn built Shadow Creek Golf Course, and E2 confirms Wynn Resorts owns Encore.
Status: Supported.",
        blocks: &[
            Block {
                steps: &[(ER, &["E3"]), (RV, &["E3"]), (V, &["E3"])],
                status: R,
            },
            Block {
                steps: &[(ER, &["E3"]), (RV, &["E3", "E2"]), (V, &["E3", "E2"])],
                status: S,
            },
        ],
        judged: R,
    },
    Fixture {
        name: "carnegie-mellon",
        claim: "Carnegie Mellon University, not the institution which is home to the Lyme Academy of Fine Arts, is a university in Pennsylvania.",
        label: S,
        evidence_count: 3,
        chain: "C1: Carnegie Mellon University, not the institution which is home to the Lyme Academy of Fine Arts, is a university in Pennsylvania.
Entity Resolution: institution which is home to the Lyme Academy of Fine Arts -> University of New Haven (from E1)
Resolution Verification: E1 confirms Lyme Academy College of Fine Arts is part of University of New Haven, not CMU. E3 confirms CMU is in Pennsylvania.
Verification: E1 refutes the institution which is home to the Lyme Academy of Fine Arts being CMU. E3 supports CMU being in Pennsylvania.
Status: Refuted.",
        blocks: &[Block {
            steps: &[(ER, &["E1"]), (RV, &["E1", "E3"]), (V, &["E1", "E3"])],
            status: R,
        }],
        judged: R,
    },
    Fixture {
        name: "solo-norway",
        claim: "Orange is the main flavor of both zero-calorie soft drinks, Solo from Norway, and the drink advertised with Krupa (song).",
        label: R,
        evidence_count: 3,
        chain: "C1: Orange is the main flavor of Solo from Norway.
Verification: E1 confirms Solo is an orange-flavored soft drink from Norway.
Status: Supported.

C2: Orange is the main flavor of the drink advertised with Krupa (song).
Entity Resolution: Drink advertised with Krupa -> Sunkist
Resolution Verification: E3 confirms Krupa is from an Sunkist advert.
Verification: E3 confirms Krupa is from an Sunkist advert and E2 confirms Sunkist is primarily orange flavored.
Status: Supported.",
        blocks: &[
            Block {
                steps: &[(V, &["E1"])],
                status: S,
            },
            Block {
                steps: &[(ER, &[]), (RV, &["E3"]), (V, &["E3", "E2"])],
                status: S,
            },
        ],
        judged: S,
    },
    Fixture {
        name: "forever-strong",
        claim: "The star of Forever Strong played a character that is based on the Hanna-Barbera show \"Birdman and the Galaxy Trio\".",
        label: S,
        evidence_count: 2,
        chain: "C1: The star of Forever Strong played a character that is based on the Hanna-Barbara show \"Birdman and the Galaxy Trio\".
Entity Resolution: Star of Forever Strong -> Gary Cole (from E1)
Resolution Verification: E1 confirms Gary Cole was a star of Forever Strong.
Entity Resolution: Character played by Gary Cole -> ? (from E2)
Resolution Verification: E2 confirms Gary Cole voiced Harvey Birdman, but it doesn't mention him playing a character in Forever Strong.
Verification: E1 shows Gary Cole was a star of Forever Strong, but E2 shows he voiced Harvey Birdman, not a character in Forever Strong. Therefore, the claim is refuted.
Status: Refuted.",
        blocks: &[Block {
            steps: &[
                (ER, &["E1"]),
                (RV, &["E1"]),
                (ER, &["E2"]),
                (RV, &["E2"]),
                (V, &["E1", "E2"]),
            ],
            status: R,
        }],
        judged: R,
    },
];

pub fn annotated_fixtures() -> Vec<AnnotatedRecord> {
    FIXTURES.iter().map(Fixture::annotated).collect()
}

// ---------------------------------------------------------------------------
// Scripted 20-example selection scenario.

/// What the scripted model answers for one prompt.
#[derive(Clone, Copy, Debug)]
pub enum Reply {
    /// Well-formed chain judging to the verdict.
    Good(Verdict),
    /// Chain judging to the verdict that cites a non-existent E5.
    BadEvidence(Verdict),
    /// Chain judging to the verdict whose C1 cites C2.
    ForwardCitation(Verdict),
    /// Chain judging to the verdict with a lowercase status word.
    LowercaseStatus(Verdict),
    /// Chain judging to the verdict whose entity resolution is ungrounded.
    UngroundedEntity(Verdict),
    /// Chain using list and bold markers (strict parse fails).
    Markdown(Verdict),
    /// Prose with no chain.
    Garbage,
    /// Cut off at the token limit; the partial text is a full chain.
    Truncated(Verdict),
    /// No script entry: the backend errors.
    Missing,
}

pub struct Case {
    pub id: &'static str,
    pub gold: Verdict,
    pub initial: Reply,
    /// Only consulted when the initial chain misses the gold label.
    pub hint: Reply,
    pub full: Bucket,
    pub no_format_check: Bucket,
    pub no_hints: Bucket,
}

use Bucket::{RejectedFormat as RF, RejectedWrong as RW, D1, D2};
use Reply::*;

pub const CASES: &[Case] = &[
    Case {
        id: "ex01",
        gold: S,
        initial: Good(S),
        hint: Missing,
        full: D1,
        no_format_check: D1,
        no_hints: D1,
    },
    Case {
        id: "ex02",
        gold: R,
        initial: Good(R),
        hint: Missing,
        full: D1,
        no_format_check: D1,
        no_hints: D1,
    },
    Case {
        id: "ex03",
        gold: S,
        initial: Good(S),
        hint: Missing,
        full: D1,
        no_format_check: D1,
        no_hints: D1,
    },
    Case {
        id: "ex04",
        gold: R,
        initial: Good(R),
        hint: Missing,
        full: D1,
        no_format_check: D1,
        no_hints: D1,
    },
    Case {
        id: "ex05",
        gold: S,
        initial: Good(R),
        hint: Good(S),
        full: D2,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex06",
        gold: R,
        initial: Good(S),
        hint: Good(R),
        full: D2,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex07",
        gold: R,
        initial: Garbage,
        hint: Good(R),
        full: D2,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex08",
        gold: S,
        initial: Truncated(S),
        hint: Good(S),
        full: D2,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex09",
        gold: S,
        initial: Good(R),
        hint: Good(R),
        full: RW,
        no_format_check: RW,
        no_hints: RW,
    },
    Case {
        id: "ex10",
        gold: R,
        initial: Good(S),
        hint: Garbage,
        full: RW,
        no_format_check: RW,
        no_hints: RW,
    },
    Case {
        id: "ex11",
        gold: R,
        initial: Missing,
        hint: Good(R),
        full: RW,
        no_format_check: RW,
        no_hints: RW,
    },
    Case {
        id: "ex12",
        gold: S,
        initial: Good(R),
        hint: Truncated(S),
        full: RW,
        no_format_check: RW,
        no_hints: RW,
    },
    Case {
        id: "ex13",
        gold: S,
        initial: BadEvidence(S),
        hint: Good(S),
        full: RF,
        no_format_check: D1,
        no_hints: RF,
    },
    Case {
        id: "ex14",
        gold: R,
        initial: ForwardCitation(R),
        hint: Good(R),
        full: RF,
        no_format_check: D1,
        no_hints: RF,
    },
    Case {
        id: "ex15",
        gold: R,
        initial: LowercaseStatus(R),
        hint: Good(R),
        full: RF,
        no_format_check: D1,
        no_hints: RF,
    },
    Case {
        id: "ex16",
        gold: S,
        initial: Good(R),
        hint: BadEvidence(S),
        full: RF,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex17",
        gold: R,
        initial: Good(S),
        hint: UngroundedEntity(R),
        full: RF,
        no_format_check: D2,
        no_hints: RW,
    },
    Case {
        id: "ex18",
        gold: S,
        initial: Good(S),
        hint: Missing,
        full: D1,
        no_format_check: D1,
        no_hints: D1,
    },
    Case {
        id: "ex19",
        gold: R,
        initial: Good(S),
        hint: Missing,
        full: RW,
        no_format_check: RW,
        no_hints: RW,
    },
    Case {
        id: "ex20",
        gold: S,
        initial: Markdown(S),
        hint: Good(S),
        full: D2,
        no_format_check: D2,
        no_hints: RW,
    },
];

fn status(v: Verdict) -> &'static str {
    v.as_str()
}

/// Two-block chain; the second block carries the verdict, the first is
/// always Supported.
pub fn reply_text(id: &str, reply: Reply) -> Option<String> {
    let v = match reply {
        Good(v) | BadEvidence(v) | ForwardCitation(v) | LowercaseStatus(v) | UngroundedEntity(v) | Markdown(v)
        | Truncated(v) => v,
        Garbage => return Some(format!("The claim about {id} looks fine to me, probably supported.")),
        Missing => return None,
    };
    let c1_sub = if matches!(reply, ForwardCitation(_)) {
        format!("The subject of {id}, as named in C2, exists.")
    } else {
        format!("The subject of {id} exists.")
    };
    let er = if matches!(reply, UngroundedEntity(_)) {
        format!("Entity Resolution: subject -> {id} entity")
    } else {
        format!("Entity Resolution: subject -> {id} entity (from E1)")
    };
    let second_rv = if matches!(reply, UngroundedEntity(_)) {
        String::new()
    } else {
        "\nResolution Verification: E1 names the entity.".to_string()
    };
    let v2_cite = if matches!(reply, BadEvidence(_)) { "E5" } else { "E2" };
    let final_status = if matches!(reply, LowercaseStatus(_)) {
        status(v).to_lowercase()
    } else {
        status(v).to_string()
    };
    let text = format!(
        "C1: {c1_sub}\nEntity Resolution: subject -> {id} entity (from E1)\nResolution Verification: E1 confirms the entity.\nVerification: E1 supports that it exists.\nStatus: Supported.\n\nC2: The {id} entity has the stated property, given C1.\n{er}{second_rv}\nVerification: {v2_cite} bears on the property.\nStatus: {final_status}."
    );
    if matches!(reply, Markdown(_)) {
        return Some(
            text.lines()
                .map(|l| match l.split_once(':') {
                    Some((k, rest)) if !k.starts_with('C') => format!("- **{k}:**{rest}"),
                    _ => l.to_string(),
                })
                .collect::<Vec<_>>()
                .join("\n"),
        );
    }
    Some(text)
}

pub fn scenario_corpus() -> Vec<ClaimRecord> {
    CASES
        .iter()
        .map(|c| {
            ClaimRecord::new(
                c.id,
                format!("Claim number {} about a subject.", c.id),
                EvidenceSet::new(vec![
                    format!("{} first evidence.", c.id),
                    format!("{} second evidence.", c.id),
                ])
                .unwrap(),
                Some(c.gold),
            )
            .unwrap()
        })
        .collect()
}

pub fn scenario_script(templates: &TemplateSet) -> ScriptedBackend {
    let mut script = ScriptedBackend::new(Fallback::Error);
    for (case, rec) in CASES.iter().zip(scenario_corpus()) {
        let initial = templates.render(TemplateKind::Structured, &rec, None).unwrap();
        let hinted = templates.render_hinted(&rec).unwrap();
        for (prompt, reply) in [(initial, case.initial), (hinted, case.hint)] {
            match (reply, reply_text(case.id, reply)) {
                (Truncated(_), Some(text)) => script.insert_truncated(&prompt, text),
                (_, Some(text)) => script.insert(&prompt, text),
                (_, None) => {}
            }
        }
    }
    script
}

/// Wraps a backend and counts calls.
pub struct Counting<B> {
    pub inner: B,
    pub calls: AtomicUsize,
}

impl<B: Backend> Counting<B> {
    pub fn new(inner: B) -> Arc<Self> {
        Arc::new(Self {
            inner,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: Backend> Backend for Counting<B> {
    fn call(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.call(request)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

pub fn scenario_config(dir: &std::path::Path) -> PipelineConfig {
    PipelineConfig {
        out_dir: dir.join("out"),
        concurrency: 4,
        ..PipelineConfig::default()
    }
}

pub fn buckets(ledger: &veristruct::pipeline::SelectionLedger) -> BTreeMap<String, Bucket> {
    ledger.entries.iter().map(|e| (e.id.clone(), e.bucket)).collect()
}

/// Runs one round of the scenario against a fresh scripted backend.
pub fn run_scenario(
    config: &PipelineConfig,
    journal: Option<&mut veristruct::pipeline::Journal>,
) -> (veristruct::pipeline::RoundOutput, usize) {
    let templates = TemplateSet::default();
    let backend = Counting::new(scenario_script(&templates));
    let client = veristruct::pipeline::client_with(config, backend.clone());
    let out = veristruct::pipeline::run_round(
        config,
        1,
        &scenario_corpus(),
        &annotated_fixtures(),
        &client,
        &templates,
        journal,
    )
    .expect("scenario round runs");
    (out, backend.calls())
}

/// Bucket expected with both hints and the format check disabled.
pub fn expected_without_both(case: &Case) -> Bucket {
    match case.no_hints {
        Bucket::RejectedFormat => Bucket::D1,
        b => b,
    }
}
