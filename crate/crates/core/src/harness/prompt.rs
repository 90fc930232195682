//! Completion prompts and extraction of the generated body.

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::ChatMessage;
use super::HarnessError;
use crate::bench::BenchmarkItem;

const BUILTIN_TEMPLATES: &str = include_str!("../../data/templates.toml");
pub const DEFAULT_TEMPLATE: &str = "completion-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub name: String,
    pub instruction: String,
    pub inquiry: String,
    /// Parts 1-4 of the fixed in-context example.
    pub exemplar_context: String,
    pub exemplar_body: String,
}

#[derive(Deserialize)]
struct TemplateFile {
    template: Vec<PromptTemplate>,
}

impl PromptTemplate {
    pub fn builtin(name: &str) -> Result<Self, HarnessError> {
        Self::from_toml(BUILTIN_TEMPLATES, name)
    }

    pub fn from_path(path: &Path, name: &str) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Template(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, name)
    }

    pub fn from_toml(text: &str, name: &str) -> Result<Self, HarnessError> {
        let file: TemplateFile = toml::from_str(text).map_err(|e| HarnessError::Template(e.to_string()))?;
        let names: Vec<String> = file.template.iter().map(|t| t.name.clone()).collect();
        file.template
            .into_iter()
            .find(|t| t.name == name)
            .ok_or_else(|| HarnessError::Template(format!("no template `{name}`; available: {}", names.join(", "))))
    }

    /// Hex SHA-256 of every template field, truncated to 16 bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.name, &self.instruction, &self.inquiry, &self.exemplar_context, &self.exemplar_body] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

fn fenced(code: &str) -> String {
    let nl = if code.ends_with('\n') { "" } else { "\n" };
    format!("```python\n{code}{nl}```")
}

fn user_turn(instruction: &str, context: &str) -> ChatMessage {
    ChatMessage::user(format!("{instruction}\n\n{}", fenced(context)))
}

/// Messages for the first turn. Parts 1-4 of the item appear verbatim
/// inside a fenced block after the instruction. With the exemplar, the
/// exchange is preceded by one solved example.
pub fn build_completion_prompt(item: &BenchmarkItem, template: &PromptTemplate, with_exemplar: bool) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(3);
    if with_exemplar {
        messages.push(user_turn(&template.instruction, &template.exemplar_context));
        messages.push(ChatMessage::assistant(fenced(&template.exemplar_body)));
    }
    messages.push(user_turn(&template.instruction, &item.snippet.prompt_context()));
    messages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionPath {
    Empty,
    MatchedDefinition,
    FencedBlock,
    RawText,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedBody {
    pub body: String,
    pub path: ExtractionPath,
}

fn fence_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[^\S\n]*\n(.*?)```").unwrap())
}

fn compact(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// The `def` line(s) of a signature, decorators dropped.
fn def_header(signature: &str) -> &str {
    let start = signature
        .match_indices("def ")
        .map(|(i, _)| signature[..i].rfind('\n').map_or(0, |n| n + 1))
        .next()
        .unwrap_or(0);
    &signature[start..]
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

/// Body of the definition matching `header` in `code`, without its
/// docstring, re-indented so the `def` sits at column 0.
fn matching_definition(code: &str, header: &str) -> Option<String> {
    let target = compact(header);
    if target.is_empty() {
        return None;
    }
    let lines: Vec<&str> = code.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let t = line.trim_start();
        if !(t.starts_with("def ") || t.starts_with("async def ")) {
            continue;
        }
        // accumulate header lines until the compacted text covers target
        let mut acc = String::new();
        let mut end = None;
        for (j, l) in lines.iter().enumerate().skip(i) {
            acc.push_str(&compact(l));
            if acc.len() >= target.len() {
                end = Some(j);
                break;
            }
        }
        let Some(end) = end else { continue };
        if !acc.starts_with(&target) {
            continue;
        }
        let def_indent = indent_of(line);
        let mut body_lines: Vec<String> = Vec::new();
        let trailing = &acc[target.len()..];
        if !trailing.is_empty() {
            // one-line definition: `def f(): return x`
            let raw = lines[end];
            let colon = raw.rfind(':').map_or(raw.len(), |c| c + 1);
            body_lines.push(format!("    {}", raw[colon..].trim()));
        }
        for l in &lines[end + 1..] {
            if !l.trim().is_empty() && indent_of(l) <= def_indent {
                break;
            }
            let cut = def_indent.min(indent_of(l));
            body_lines.push(l[cut..].to_string());
        }
        while body_lines.last().is_some_and(|l| l.trim().is_empty()) {
            body_lines.pop();
        }
        let body = strip_docstring(&body_lines);
        return Some(body.into_iter().map(|l| l + "\n").collect());
    }
    None
}

fn strip_docstring(lines: &[String]) -> Vec<String> {
    let Some(first) = lines.iter().position(|l| !l.trim().is_empty()) else {
        return lines.to_vec();
    };
    let t = lines[first].trim_start();
    let t = t.trim_start_matches(['r', 'R', 'u', 'U']);
    let quote = if t.starts_with("\"\"\"") {
        "\"\"\""
    } else if t.starts_with("'''") {
        "'''"
    } else {
        return lines.to_vec();
    };
    let after_open = &t[3..];
    if after_open.contains(quote) {
        return lines[first + 1..].to_vec();
    }
    for (k, l) in lines.iter().enumerate().skip(first + 1) {
        if l.contains(quote) {
            return lines[k + 1..].to_vec();
        }
    }
    lines.to_vec()
}

/// Body text from the first-turn completion. Tries, in order: a
/// re-stated definition matching `signature` (inside fences or not), the
/// first fenced block, the raw text.
pub fn extract_generated_body(raw_completion: &str, signature: &str) -> ExtractedBody {
    if raw_completion.trim().is_empty() {
        return ExtractedBody {
            body: String::new(),
            path: ExtractionPath::Empty,
        };
    }
    let header = def_header(signature);
    let blocks: Vec<&str> = fence_regex()
        .captures_iter(raw_completion)
        .map(|c| c.get(1).map_or("", |m| m.as_str()))
        .collect();
    for code in blocks.iter().copied().chain(std::iter::once(raw_completion)) {
        if let Some(body) = matching_definition(code, header) {
            return ExtractedBody {
                body,
                path: ExtractionPath::MatchedDefinition,
            };
        }
    }
    match blocks.first() {
        Some(code) => ExtractedBody {
            body: code.to_string(),
            path: ExtractionPath::FencedBlock,
        },
        None => ExtractedBody {
            body: raw_completion.to_string(),
            path: ExtractionPath::RawText,
        },
    }
}
