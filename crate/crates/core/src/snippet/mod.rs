//! Function-level snippet extraction from Python sources.
//!
//! Every function definition is cut into five parts, each an exact byte
//! slice of the file:
//!
//! 1. header comments: leading comments and module docstring, up to the
//!    first line of code;
//! 2. imports and globals: top-level `import` statements, assignments and
//!    import-only `try` blocks that precede the function, each slice
//!    running up to the next top-level statement;
//! 3. signature: decorators through the line holding the header colon;
//! 4. docstring: up to the end of the docstring statement's last line;
//! 5. body: the rest of the definition, plus trailing comment lines
//!    indented under the `def`.
//!
//! The parts are disjoint and appear in file order, so concatenating them
//! reproduces the slices they were cut from.

mod comments;
mod complexity;

use std::cell::RefCell;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tree_sitter::{Node, Parser, Tree};

use crate::lexer::tokenize;

pub use comments::{extract_body_comments, normalize_comment, CommentBag};
pub use complexity::cyclomatic_complexity;

#[derive(Debug, Error)]
pub enum SnippetError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: String, reason: String },
    #[error("syntax error near line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetMetrics {
    pub body_lines: usize,
    pub cyclomatic_complexity: u32,
    pub comment_count: usize,
    pub prompt_lines: usize,
    pub prompt_tokens: usize,
    pub body_tokens: usize,
}

/// Byte ranges of each part in the source file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSpans {
    pub header: Range<usize>,
    pub imports_globals: Vec<Range<usize>>,
    pub signature: Range<usize>,
    pub docstring: Range<usize>,
    pub body: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSnippet {
    pub id: String,
    pub name: String,
    pub header_comments: String,
    pub imports_globals: String,
    pub signature: String,
    pub docstring: String,
    pub body: String,
    pub source_path: String,
    /// 1-based line of the `def` (or first decorator).
    #[serde(default)]
    pub line: usize,
    pub metrics: SnippetMetrics,
    #[serde(default = "default_reuse")]
    pub reuse_count: u64,
    #[serde(default)]
    pub is_class_method: bool,
    /// Id of the enclosing function for nested definitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default = "default_true")]
    pub syntax_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<PartSpans>,
}

fn default_reuse() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

impl FunctionSnippet {
    /// Builds a snippet from already separated parts, computing id and
    /// metrics from text. A body that does not parse gets complexity 1 and
    /// `syntax_ok = false`.
    pub fn from_parts(
        header_comments: &str,
        imports_globals: &str,
        signature: &str,
        docstring: &str,
        body: &str,
        source_path: &str,
    ) -> Self {
        let (cc, syntax_ok) = match cyclomatic_complexity(body) {
            Ok(cc) => (cc, true),
            Err(_) => (1, false),
        };
        let metrics = compute_metrics(header_comments, imports_globals, signature, docstring, body, cc);
        FunctionSnippet {
            id: snippet_id(header_comments, imports_globals, signature, docstring, body),
            name: function_name(signature).unwrap_or_default(),
            header_comments: header_comments.into(),
            imports_globals: imports_globals.into(),
            signature: signature.into(),
            docstring: docstring.into(),
            body: body.into(),
            source_path: source_path.into(),
            line: 0,
            metrics,
            reuse_count: 1,
            is_class_method: false,
            parent_id: None,
            syntax_ok,
            spans: None,
        }
    }

    /// Parts 1-4 in order: the completion prompt context.
    pub fn prompt_context(&self) -> String {
        [
            self.header_comments.as_str(),
            &self.imports_globals,
            &self.signature,
            &self.docstring,
        ]
        .concat()
    }

    /// The function definition itself: signature, docstring and body.
    pub fn definition_text(&self) -> String {
        [self.signature.as_str(), &self.docstring, &self.body].concat()
    }

    pub fn full_text(&self) -> String {
        [self.prompt_context().as_str(), &self.body].concat()
    }
}

/// Deterministic content hash of the five parts.
pub fn snippet_id(header: &str, imports: &str, signature: &str, docstring: &str, body: &str) -> String {
    let mut h = Sha256::new();
    for part in [header, imports, signature, docstring, body] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

pub(crate) fn function_name(signature: &str) -> Option<String> {
    let at = signature.find("def ")?;
    let rest = signature[at + 4..].trim_start();
    let end = rest.find(|c: char| !(c == '_' || c.is_alphanumeric()))?;
    Some(rest[..end].to_string())
}

pub(crate) fn count_nonblank_lines(text: &str) -> usize {
    text.lines().filter(|l| !l.trim().is_empty()).count()
}

fn compute_metrics(
    header: &str,
    imports: &str,
    signature: &str,
    docstring: &str,
    body: &str,
    cyclomatic_complexity: u32,
) -> SnippetMetrics {
    let prompt = [header, imports, signature, docstring].concat();
    SnippetMetrics {
        body_lines: count_nonblank_lines(body),
        cyclomatic_complexity,
        comment_count: extract_body_comments(body).len(),
        prompt_lines: count_nonblank_lines(&prompt),
        prompt_tokens: tokenize(&prompt).len(),
        body_tokens: tokenize(body).len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityRules {
    /// Body must have strictly more non-blank lines than this.
    pub min_body_lines: usize,
}

impl Default for EligibilityRules {
    fn default() -> Self {
        Self { min_body_lines: 6 }
    }
}

/// Sampling rules: documented, long enough, not a method, parsed cleanly.
pub fn eligibility_filter(snippet: &FunctionSnippet, rules: &EligibilityRules) -> bool {
    !snippet.docstring.trim().is_empty()
        && snippet.metrics.body_lines > rules.min_body_lines
        && !snippet.is_class_method
        && snippet.syntax_ok
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub snippets: Vec<FunctionSnippet>,
    pub diagnostics: Vec<Diagnostic>,
}

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

pub(crate) fn parse_python(text: &str) -> Option<Tree> {
    PARSER.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.is_none() {
            let mut parser = Parser::new();
            parser
                .set_language(&tree_sitter_python::LANGUAGE.into())
                .expect("bundled python grammar is ABI compatible");
            *slot = Some(parser);
        }
        slot.as_mut().and_then(|p| p.parse(text, None))
    })
}

/// 0-based row of the first error or missing node.
pub(crate) fn first_error_row(root: Node<'_>) -> usize {
    let mut cursor = root.walk();
    let mut stack = vec![root];
    let mut best: Option<usize> = None;
    while let Some(n) = stack.pop() {
        if n.is_error() || n.is_missing() {
            let row = n.start_position().row;
            best = Some(best.map_or(row, |b| b.min(row)));
            continue;
        }
        if n.has_error() {
            stack.extend(n.children(&mut cursor));
        }
    }
    best.unwrap_or(0)
}

/// Reads a source file, decoding invalid UTF-8 lossily. Files containing
/// NUL bytes are treated as binary and rejected.
pub fn read_source(path: &Path) -> Result<String, SnippetError> {
    let bytes = std::fs::read(path).map_err(|source| SnippetError::Read {
        path: path.display().to_string(),
        source,
    })?;
    decode_source(&bytes, &path.display().to_string())
}

pub fn decode_source(bytes: &[u8], path: &str) -> Result<String, SnippetError> {
    if bytes.contains(&0) {
        return Err(SnippetError::Decode {
            path: path.into(),
            reason: "binary content (NUL byte)".into(),
        });
    }
    Ok(String::from_utf8_lossy(bytes).into_owned())
}

fn line_start(text: &str, pos: usize) -> usize {
    text[..pos].rfind('\n').map_or(0, |i| i + 1)
}

/// Index just past the newline ending the line containing `pos` (or EOF).
fn line_end(text: &str, pos: usize) -> usize {
    text[pos..].find('\n').map_or(text.len(), |i| pos + i + 1)
}

fn is_docstring_stmt(node: Node<'_>) -> bool {
    node.kind() == "expression_statement"
        && node.named_child_count() == 1
        && node
            .named_child(0)
            .is_some_and(|c| matches!(c.kind(), "string" | "concatenated_string"))
}

fn is_import_or_global(node: Node<'_>) -> bool {
    match node.kind() {
        "import_statement" | "import_from_statement" | "future_import_statement" => true,
        "expression_statement" => node
            .named_child(0)
            .is_some_and(|c| matches!(c.kind(), "assignment" | "augmented_assignment")),
        "try_statement" => node.child_by_field_name("body").is_some_and(|b| {
            let mut cursor = b.walk();
            let stmts: Vec<_> = b.named_children(&mut cursor).filter(|c| c.kind() != "comment").collect();
            !stmts.is_empty() && stmts.iter().all(|c| is_import_or_global(*c))
        }),
        _ => false,
    }
}

struct FileLayout {
    header: Range<usize>,
    globals: Vec<Range<usize>>,
}

fn file_layout(text: &str, root: Node<'_>) -> FileLayout {
    let mut cursor = root.walk();
    let stmts: Vec<Node<'_>> = root
        .named_children(&mut cursor)
        .filter(|n| n.kind() != "comment")
        .collect();
    let mut first_code = 0;
    if stmts.first().is_some_and(|n| is_docstring_stmt(*n)) {
        first_code = 1;
    }
    let header_end = stmts
        .get(first_code)
        .map_or(text.len(), |n| line_start(text, n.start_byte()));
    let mut globals = Vec::new();
    for (i, stmt) in stmts.iter().enumerate().skip(first_code) {
        if !is_import_or_global(*stmt) {
            continue;
        }
        let start = line_start(text, stmt.start_byte()).max(header_end);
        let end = stmts
            .get(i + 1)
            .map_or(text.len(), |next| line_start(text, next.start_byte()));
        if start < end {
            globals.push(start..end);
        }
    }
    FileLayout {
        header: 0..header_end,
        globals,
    }
}

/// Extends a function's end over following blank and comment lines indented
/// deeper than the `def`, stopping after the last such comment.
fn extend_trailing_comments(text: &str, mut end: usize, def_col: usize) -> usize {
    let mut pos = end;
    while pos < text.len() {
        let next = line_end(text, pos);
        let line = &text[pos..next];
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            pos = next;
            continue;
        }
        let indent = line.len() - trimmed.len();
        if trimmed.starts_with('#') && indent > def_col {
            end = next;
            pos = next;
        } else {
            break;
        }
    }
    end
}

#[derive(Clone, Copy)]
enum Scope<'s> {
    Module,
    Class,
    Function(&'s str),
}

/// Extracts every function definition of a Python file as a snippet.
///
/// Files with any syntax error yield no snippets and one diagnostic.
/// Output order is file order (pre-order for nested definitions).
pub fn parse_source(file_text: &str, source_path: &str) -> ParseOutcome {
    let mut outcome = ParseOutcome::default();
    let Some(tree) = parse_python(file_text) else {
        outcome.diagnostics.push(Diagnostic {
            path: source_path.into(),
            line: None,
            message: "parser produced no tree".into(),
        });
        return outcome;
    };
    let root = tree.root_node();
    if root.has_error() {
        outcome.diagnostics.push(Diagnostic {
            path: source_path.into(),
            line: Some(first_error_row(root) + 1),
            message: "syntax error; file skipped".into(),
        });
        return outcome;
    }
    let layout = file_layout(file_text, root);
    let mut ctx = Extraction {
        text: file_text,
        path: source_path,
        layout: &layout,
        outcome: &mut outcome,
    };
    ctx.visit(root, Scope::Module);
    outcome
}

struct Extraction<'a> {
    text: &'a str,
    path: &'a str,
    layout: &'a FileLayout,
    outcome: &'a mut ParseOutcome,
}

impl Extraction<'_> {
    fn visit(&mut self, node: Node<'_>, scope: Scope<'_>) {
        let mut cursor = node.walk();
        let children: Vec<Node<'_>> = node.named_children(&mut cursor).collect();
        for child in children {
            match child.kind() {
                "function_definition" => self.function(child, child, scope),
                "decorated_definition" => match child.child_by_field_name("definition") {
                    Some(def) if def.kind() == "function_definition" => self.function(child, def, scope),
                    Some(def) if def.kind() == "class_definition" => self.visit_class(def),
                    _ => {}
                },
                "class_definition" => self.visit_class(child),
                _ => self.visit(child, scope),
            }
        }
    }

    fn visit_class(&mut self, class: Node<'_>) {
        if let Some(body) = class.child_by_field_name("body") {
            self.visit(body, Scope::Class);
        }
    }

    fn function(&mut self, outer: Node<'_>, def: Node<'_>, scope: Scope<'_>) {
        let text = self.text;
        let name = def
            .child_by_field_name("name")
            .map(|n| text[n.byte_range()].to_string())
            .unwrap_or_default();
        let Some(block) = def.child_by_field_name("body") else {
            return;
        };
        let mut cursor = def.walk();
        let colon = def
            .children(&mut cursor)
            .filter(|c| c.kind() == ":")
            .last()
            .map(|c| c.end_byte());
        let Some(colon_end) = colon else {
            return;
        };
        let def_start = line_start(text, outer.start_byte());
        let def_col = outer.start_byte() - def_start;
        let same_line_body = !text[colon_end..block.start_byte().max(colon_end)].contains('\n');
        let func_end = extend_trailing_comments(text, line_end(text, def.end_byte().saturating_sub(1)), def_col);

        let (sig_end, doc_end) = if same_line_body {
            (colon_end, colon_end)
        } else {
            let sig_end = line_end(text, colon_end);
            let mut bc = block.walk();
            let first_stmt = block.named_children(&mut bc).find(|c| c.kind() != "comment");
            let doc_end = match first_stmt {
                Some(stmt) if is_docstring_stmt(stmt) => line_end(text, stmt.end_byte().saturating_sub(1)),
                _ => sig_end,
            };
            (sig_end, doc_end.max(sig_end))
        };
        let body_range = doc_end..func_end.max(doc_end);
        let body = &text[body_range.clone()];
        if body.trim().is_empty() {
            self.outcome.diagnostics.push(Diagnostic {
                path: self.path.into(),
                line: Some(outer.start_position().row + 1),
                message: format!("function `{name}` has no body besides its docstring; skipped"),
            });
            return;
        }

        let globals: Vec<Range<usize>> = self
            .layout
            .globals
            .iter()
            .filter(|r| r.end <= def_start)
            .cloned()
            .collect();
        let header_range = self.layout.header.start..self.layout.header.end.min(def_start);
        let header = &text[header_range.clone()];
        let imports: String = globals.iter().map(|r| &text[r.clone()]).collect();
        let signature = &text[def_start..sig_end];
        let docstring = &text[sig_end..doc_end];

        let cc = 1 + complexity::decision_points(block);
        let metrics = compute_metrics(header, &imports, signature, docstring, body, cc);
        let id = snippet_id(header, &imports, signature, docstring, body);
        let snippet = FunctionSnippet {
            id: id.clone(),
            name,
            header_comments: header.into(),
            imports_globals: imports,
            signature: signature.into(),
            docstring: docstring.into(),
            body: body.into(),
            source_path: self.path.into(),
            line: outer.start_position().row + 1,
            metrics,
            reuse_count: 1,
            is_class_method: matches!(scope, Scope::Class),
            parent_id: match scope {
                Scope::Function(p) => Some(p.to_string()),
                _ => None,
            },
            syntax_ok: true,
            spans: Some(PartSpans {
                header: header_range,
                imports_globals: globals,
                signature: def_start..sig_end,
                docstring: sig_end..doc_end,
                body: body_range,
            }),
        };
        self.outcome.snippets.push(snippet);
        self.visit(block, Scope::Function(&id));
    }
}
