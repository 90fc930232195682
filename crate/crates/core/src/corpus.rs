//! Corpus ingestion from a directory tree or a JSON-Lines dump.
//!
//! Directory layout: every top-level subdirectory of the root is one
//! project; `.py` files anywhere below it belong to that project. Files
//! directly under the root belong to a project named after the root.
//!
//! JSON-Lines layout: one object per line,
//! `{"path": .., "content": .., "project": .., "reuse_count"?: ..}`.
//!
//! Files with identical content are ingested once. Unless a record gives
//! `reuse_count` explicitly, it is the number of distinct projects holding
//! that content.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use walkdir::WalkDir;

use crate::snippet::{decode_source, parse_source, Diagnostic, FunctionSnippet};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub project: String,
    pub content: String,
    /// Hex SHA-256 of the content.
    pub content_hash: String,
    pub reuse_count: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// Sorted by path.
    pub files: Vec<SourceFile>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlFile {
    path: String,
    content: String,
    #[serde(default)]
    project: Option<String>,
    #[serde(default)]
    reuse_count: Option<u64>,
}

struct RawFile {
    path: String,
    project: String,
    content: String,
    explicit_reuse: Option<u64>,
}

fn content_hash(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

impl Corpus {
    /// Ingests `path`: a directory, or a `.jsonl` / `.json` file.
    pub fn ingest(path: &Path) -> Result<Self, CorpusError> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            Self::from_jsonl(path)
        }
    }

    pub fn from_dir(root: &Path) -> Result<Self, CorpusError> {
        let root_name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| ".".into());
        let mut raw = Vec::new();
        let mut diagnostics = Vec::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| CorpusError::Io {
                path: root.display().to_string(),
                source: e.into(),
            })?;
            let p = entry.path();
            if !entry.file_type().is_file() || p.extension().and_then(|e| e.to_str()) != Some("py") {
                continue;
            }
            let rel = p.strip_prefix(root).unwrap_or(p);
            let rel_str = rel.to_string_lossy().replace('\\', "/");
            let project = match rel.components().count() {
                0 | 1 => root_name.clone(),
                _ => rel
                    .components()
                    .next()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .unwrap_or_default(),
            };
            let bytes = fs::read(p).map_err(|source| CorpusError::Io {
                path: p.display().to_string(),
                source,
            })?;
            match decode_source(&bytes, &rel_str) {
                Ok(content) => raw.push(RawFile {
                    path: rel_str,
                    project,
                    content,
                    explicit_reuse: None,
                }),
                Err(e) => diagnostics.push(Diagnostic {
                    path: rel_str,
                    line: None,
                    message: e.to_string(),
                }),
            }
        }
        Ok(Self::assemble(raw, diagnostics))
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let name = path.display().to_string();
        let file = fs::File::open(path).map_err(|source| CorpusError::Io {
            path: name.clone(),
            source,
        })?;
        let mut raw = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: name.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlFile = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
                path: name.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let project = rec
                .project
                .unwrap_or_else(|| rec.path.split('/').next().unwrap_or("").to_string());
            raw.push(RawFile {
                path: rec.path,
                project,
                content: rec.content,
                explicit_reuse: rec.reuse_count,
            });
        }
        Ok(Self::assemble(raw, Vec::new()))
    }

    fn assemble(mut raw: Vec<RawFile>, diagnostics: Vec<Diagnostic>) -> Self {
        raw.sort_by(|a, b| a.path.cmp(&b.path).then(a.project.cmp(&b.project)));
        let hashes: Vec<String> = raw.par_iter().map(|f| content_hash(&f.content)).collect();
        let mut projects: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for (f, h) in raw.iter().zip(&hashes) {
            projects.entry(h).or_default().insert(&f.project);
        }
        let counts: HashMap<String, u64> = projects
            .into_iter()
            .map(|(h, p)| (h.to_string(), p.len() as u64))
            .collect();
        let mut seen = BTreeSet::new();
        let mut files = Vec::new();
        for (f, h) in raw.into_iter().zip(hashes) {
            if !seen.insert(h.clone()) {
                continue;
            }
            let reuse_count = f.explicit_reuse.unwrap_or(counts[&h]);
            files.push(SourceFile {
                path: f.path,
                project: f.project,
                content: f.content,
                content_hash: h,
                reuse_count,
            });
        }
        Corpus { files, diagnostics }
    }

    /// Every function in every file, with the file's reuse count, in file
    /// order. Per-file diagnostics are appended to the returned list.
    pub fn extract(&self) -> (Vec<FunctionSnippet>, Vec<Diagnostic>) {
        let outcomes: Vec<_> = self
            .files
            .par_iter()
            .map(|f| {
                let mut out = parse_source(&f.content, &f.path);
                for s in &mut out.snippets {
                    s.reuse_count = f.reuse_count;
                }
                out
            })
            .collect();
        let mut snippets = Vec::new();
        let mut diagnostics = self.diagnostics.clone();
        for o in outcomes {
            snippets.extend(o.snippets);
            diagnostics.extend(o.diagnostics);
        }
        (snippets, diagnostics)
    }
}
