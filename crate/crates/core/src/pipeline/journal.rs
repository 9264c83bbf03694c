//! Append-only checkpoint journal of generation outcomes.
//!
//! Each line records one generation, keyed by `(id, stage, prompt_sha256)`,
//! and carries a SHA-256 checksum of its own payload. A torn final line (no
//! trailing newline) is the expected residue of a killed run and is dropped;
//! any other unreadable or mismatching line is corruption.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Hint,
}

/// A finished generation. `complete` is false for truncated or otherwise
/// abnormally terminated completions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generated {
    pub text: String,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JournalKey {
    pub id: String,
    pub stage: Stage,
    pub prompt_sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    id: String,
    stage: Stage,
    prompt_sha256: String,
    generated: Generated,
}

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(flatten)]
    payload: Payload,
    checksum: String,
}

fn checksum(p: &Payload) -> String {
    let bytes = serde_json::to_vec(p).expect("payload serializes");
    hex::encode(Sha256::digest(bytes))
}

pub struct Journal {
    path: PathBuf,
    file: File,
    entries: HashMap<JournalKey, Generated>,
}

impl Journal {
    /// Opens a journal. With `resume`, existing entries are loaded and new
    /// ones appended; otherwise the file is started afresh.
    pub fn open(path: &Path, resume: bool) -> Result<Self, PipelineError> {
        let io = |e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut entries = HashMap::new();
        if resume && path.exists() {
            let text = std::fs::read_to_string(path).map_err(io)?;
            let complete_len = Self::load(path, &text, &mut entries)?;
            if complete_len < text.len() {
                let f = OpenOptions::new().write(true).open(path).map_err(io)?;
                f.set_len(complete_len as u64).map_err(io)?;
            }
        } else {
            File::create(path).map_err(io)?;
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            entries,
        })
    }

    /// Returns the byte length of the intact prefix.
    fn load(path: &Path, text: &str, entries: &mut HashMap<JournalKey, Generated>) -> Result<usize, PipelineError> {
        let mut offset = 0;
        let mut line_no = 0;
        for raw in text.split_inclusive('\n') {
            line_no += 1;
            let terminated = raw.ends_with('\n');
            let body = raw.trim_end_matches('\n');
            let parsed: Option<Line> = serde_json::from_str(body).ok();
            let valid = parsed.as_ref().is_some_and(|l| checksum(&l.payload) == l.checksum);
            if !valid {
                if !terminated {
                    log::warn!("{}: dropping torn final line {line_no}", path.display());
                    return Ok(offset);
                }
                if body.trim().is_empty() {
                    offset += raw.len();
                    continue;
                }
                return Err(PipelineError::ChecksumMismatch {
                    path: path.display().to_string(),
                    line: line_no,
                });
            }
            let line = parsed.expect("validated above");
            let p = line.payload;
            entries.insert(
                JournalKey {
                    id: p.id,
                    stage: p.stage,
                    prompt_sha256: p.prompt_sha256,
                },
                p.generated,
            );
            offset += raw.len();
        }
        Ok(offset)
    }

    pub fn get(&self, key: &JournalKey) -> Option<&Generated> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, key: JournalKey, generated: Generated) -> Result<(), PipelineError> {
        let payload = Payload {
            id: key.id.clone(),
            stage: key.stage,
            prompt_sha256: key.prompt_sha256.clone(),
            generated: generated.clone(),
        };
        let line = Line {
            checksum: checksum(&payload),
            payload,
        };
        let mut text = serde_json::to_string(&line).expect("journal line serializes");
        text.push('\n');
        self.file
            .write_all(text.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| PipelineError::Io {
                path: self.path.display().to_string(),
                source: e,
            })?;
        self.entries.insert(key, generated);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(id: &str) -> JournalKey {
        JournalKey {
            id: id.into(),
            stage: Stage::Initial,
            prompt_sha256: "ab".into(),
        }
    }

    fn gen(t: &str) -> Generated {
        Generated {
            text: t.into(),
            complete: true,
        }
    }

    #[test]
    fn append_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        {
            let mut j = Journal::open(&path, false).unwrap();
            j.append(key("a"), gen("x")).unwrap();
            j.append(key("b"), gen("y\nz")).unwrap();
        }
        let j = Journal::open(&path, true).unwrap();
        assert_eq!(j.len(), 2);
        assert_eq!(j.get(&key("b")).unwrap().text, "y\nz");
        // fresh open discards
        assert!(Journal::open(&path, false).unwrap().is_empty());
    }

    #[test]
    fn torn_tail_is_dropped_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        {
            let mut j = Journal::open(&path, false).unwrap();
            j.append(key("a"), gen("x")).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\":\"b\",\"sta").unwrap();
        drop(f);
        let mut j = Journal::open(&path, true).unwrap();
        assert_eq!(j.len(), 1);
        j.append(key("c"), gen("z")).unwrap();
        drop(j);
        assert_eq!(Journal::open(&path, true).unwrap().len(), 2);
    }

    #[test]
    fn corrupted_line_is_checksum_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        {
            let mut j = Journal::open(&path, false).unwrap();
            j.append(key("a"), gen("Supported")).unwrap();
            j.append(key("b"), gen("y")).unwrap();
        }
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("Supported", "Refuted", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            Journal::open(&path, true),
            Err(PipelineError::ChecksumMismatch { line: 1, .. })
        ));
    }
}
