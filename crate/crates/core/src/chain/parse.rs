use thiserror::Error;

use super::{extract_citations, ReasoningChain, Step, StepKind, SubclaimBlock};
use crate::model::{parse_verdict, Verdict};

/// Line numbers are 1-based positions in the input text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no subclaim block found (expected a line starting with \"C1:\")")]
    MissingBlocks,
    #[error("line {line}: expected block C{expected}, found C{found}")]
    NonSequentialBlocks { line: usize, expected: u32, found: u32 },
    #[error("block C{block} has no Status line")]
    MissingStatus { block: u32 },
    #[error("block C{block} has no Verification step")]
    MissingVerification { block: u32 },
    #[error("block C{block}: malformed status {text:?}")]
    MalformedStatus { block: u32, text: String },
    #[error("line {line}: content outside any step: {text:?}")]
    StrayContent { line: usize, text: String },
}

impl ParseError {
    pub fn block(&self) -> Option<u32> {
        match self {
            ParseError::MissingStatus { block }
            | ParseError::MissingVerification { block }
            | ParseError::MalformedStatus { block, .. } => Some(*block),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Accept leading list markers (`- `, `* `, `1. `) and bold markers
    /// (`**Verification:**`) around keywords.
    pub lenient: bool,
    /// When the text has no `C<i>:` header at all, read its keyword lines as
    /// a single implicit block instead of failing with `MissingBlocks`.
    pub allow_undecomposed: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        Self::default()
    }

    pub fn lenient() -> Self {
        Self {
            lenient: true,
            ..Self::default()
        }
    }
}

/// Strict parse with the canonical keyword forms.
pub fn parse_chain(text: &str) -> Result<ReasoningChain, ParseError> {
    parse_chain_with(text, ParseOptions::strict())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Line<'a> {
    Header(u32, &'a str),
    Keyword(StepKind, &'a str),
    Status(&'a str),
    Blank,
    Other(&'a str),
}

fn strip_list_marker(line: &str) -> &str {
    for marker in ["- ", "* ", "+ ", "• "] {
        if let Some(rest) = line.strip_prefix(marker) {
            return rest.trim_start();
        }
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim_start();
        }
    }
    line
}

/// Removes one pair of `**`/`__` wrapping the keyword part of a line
/// (`**Status:** x` or `**Status**: x`).
fn strip_bold(line: &str) -> String {
    for mark in ["**", "__"] {
        if let Some(rest) = line.strip_prefix(mark) {
            if let Some(pos) = rest.find(mark) {
                let colon = rest.find(':');
                if colon.is_some_and(|c| pos <= c + 1) {
                    let mut s = String::with_capacity(rest.len());
                    s.push_str(&rest[..pos]);
                    s.push_str(&rest[pos + mark.len()..]);
                    return s;
                }
            }
        }
    }
    line.to_string()
}

fn header(line: &str) -> Option<(u32, &str)> {
    let rest = line.strip_prefix('C')?;
    let digits = rest.chars().take_while(char::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let index = rest[..digits].parse::<u32>().ok()?;
    let body = rest[digits..].strip_prefix(':')?;
    Some((index, body.trim()))
}

fn classify(line: &str) -> Line<'_> {
    if line.trim().is_empty() {
        return Line::Blank;
    }
    if let Some((index, body)) = header(line) {
        return Line::Header(index, body);
    }
    for kind in StepKind::ALL {
        if let Some(body) = line.strip_prefix(kind.keyword()).and_then(|r| r.strip_prefix(':')) {
            return Line::Keyword(kind, body.trim());
        }
    }
    if let Some(body) = line.strip_prefix("Status:") {
        return Line::Status(body.trim());
    }
    Line::Other(line)
}

struct OpenBlock {
    index: u32,
    text: String,
    steps: Vec<(StepKind, String)>,
    status: Option<(Verdict, String)>,
}

impl OpenBlock {
    fn new(index: u32, text: &str) -> Self {
        Self {
            index,
            text: text.to_string(),
            steps: Vec::new(),
            status: None,
        }
    }

    fn close(self) -> Result<SubclaimBlock, ParseError> {
        let Some((status, status_text)) = self.status else {
            return Err(ParseError::MissingStatus { block: self.index });
        };
        if !self.steps.iter().any(|(k, _)| *k == StepKind::Verification) {
            return Err(ParseError::MissingVerification { block: self.index });
        }
        Ok(SubclaimBlock {
            index: self.index,
            subclaim_citations: extract_citations(&self.text),
            subclaim_text: self.text,
            steps: self
                .steps
                .into_iter()
                .map(|(kind, text)| Step::new(kind, text))
                .collect(),
            status,
            status_text,
        })
    }
}

fn append(target: &mut String, line: &str) {
    if !target.is_empty() {
        target.push('\n');
    }
    target.push_str(line);
}

/// Parses model output into a [`ReasoningChain`].
///
/// Text before the first block header is discarded as preamble. Non-keyword
/// lines continue the preceding step (or the subclaim text if the block has
/// no step yet); blank lines are ignored.
pub fn parse_chain_with(text: &str, opts: ParseOptions) -> Result<ReasoningChain, ParseError> {
    let normalized: Vec<String> = text
        .lines()
        .map(|l| {
            let l = l.trim_end();
            if opts.lenient {
                strip_bold(strip_list_marker(l.trim_start()))
            } else {
                l.to_string()
            }
        })
        .collect();
    let lines: Vec<Line<'_>> = normalized.iter().map(|l| classify(l)).collect();

    let first_header = lines.iter().position(|l| matches!(l, Line::Header(..)));
    let (start, decomposed) = match first_header {
        Some(pos) => (pos, true),
        None if opts.allow_undecomposed => {
            let pos = lines
                .iter()
                .position(|l| matches!(l, Line::Keyword(..) | Line::Status(_)))
                .ok_or(ParseError::MissingBlocks)?;
            (pos, false)
        }
        None => return Err(ParseError::MissingBlocks),
    };

    let mut blocks = Vec::new();
    let mut current = if decomposed {
        let Line::Header(index, body) = lines[start] else {
            unreachable!()
        };
        if index != 1 {
            return Err(ParseError::NonSequentialBlocks {
                line: start + 1,
                expected: 1,
                found: index,
            });
        }
        OpenBlock::new(1, body)
    } else {
        OpenBlock::new(1, "")
    };
    let body_start = if decomposed { start + 1 } else { start };

    for (offset, line) in lines[body_start..].iter().enumerate() {
        let line_no = body_start + offset + 1;
        let stray = |text: &str| ParseError::StrayContent {
            line: line_no,
            text: text.to_string(),
        };
        match *line {
            Line::Blank => {}
            Line::Header(index, body) => {
                let expected = current.index + 1;
                if index != expected {
                    return Err(ParseError::NonSequentialBlocks {
                        line: line_no,
                        expected,
                        found: index,
                    });
                }
                let done = std::mem::replace(&mut current, OpenBlock::new(index, body));
                blocks.push(done.close()?);
            }
            Line::Keyword(kind, body) => {
                if current.status.is_some() {
                    return Err(stray(&normalized[line_no - 1]));
                }
                current.steps.push((kind, body.to_string()));
            }
            Line::Status(body) => {
                if current.status.is_some() {
                    return Err(stray(&normalized[line_no - 1]));
                }
                let verdict = parse_verdict(body).map_err(|_| ParseError::MalformedStatus {
                    block: current.index,
                    text: body.to_string(),
                })?;
                current.status = Some((verdict, body.to_string()));
            }
            Line::Other(content) => {
                if current.status.is_some() {
                    return Err(stray(content));
                }
                match current.steps.last_mut() {
                    Some((_, step_text)) => append(step_text, content),
                    None => append(&mut current.text, content),
                }
            }
        }
    }
    blocks.push(current.close()?);

    Ok(ReasoningChain {
        blocks,
        decomposed,
        raw: text.to_string(),
    })
}
