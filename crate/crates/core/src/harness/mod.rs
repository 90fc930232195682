//! Evaluation protocol: completion turn, body extraction, scoring against
//! the reference body, and a license inquiry for striking generations.

pub mod client;
pub mod journal;
pub mod prompt;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::artifact::{config_hash, ArtifactHeader};
use crate::bench::BenchmarkItem;
use crate::license::{grade_license_answer, parse_license_mention, GradeMode, GradeResult, LicenseCategory};
use crate::similarity::{classify_striking, similarity_report, SimilarityScores, StrikingStandard, StrikingVerdict};

pub use client::{
    chat_with_retries, messages_hash, CachedClient, ChatMessage, ChatRequest, ChatResponse, HttpClient, ModelClient,
    RateLimiter, ReplayClient, ReplayEntry, RetryPolicy, Role, TransportError,
};
pub use journal::{read_journal, JournalContents, JournalWriter, JOURNAL_KIND};
pub use prompt::{build_completion_prompt, extract_generated_body, ExtractionPath, PromptTemplate, DEFAULT_TEMPLATE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("template: {0}")]
    Template(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("journal {0} already exists; pass --resume to continue it or remove it to start over")]
    JournalExists(String),
    #[error(
        "journal {path} was written under config {journal} but the current config hashes to {current}; \
         rerun with the original settings or write to a new journal"
    )]
    ConfigMismatch { path: String, journal: String, current: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub snippet_id: String,
    pub model: String,
    /// Ground-truth license and category of the benchmark item.
    pub license: String,
    pub category: LicenseCategory,
    pub prompt_text: String,
    pub request_hash: String,
    pub raw_completion: String,
    pub generated_body: String,
    pub extraction: Option<ExtractionPath>,
    pub scores: Option<SimilarityScores>,
    pub verdict: Option<StrikingVerdict>,
    pub inquiry_text: Option<String>,
    pub inquiry_response: Option<String>,
    /// Present exactly when the verdict is striking and the inquiry
    /// succeeded.
    pub grade: Option<GradeResult>,
    /// The same claim graded under the other mode.
    pub alternate_grade: Option<GradeResult>,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn is_striking(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.is_striking)
    }
}

/// Everything that can change a record. Its hash guards resumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub template: String,
    pub template_digest: String,
    pub exemplar: bool,
    pub standard: StrikingStandard,
    pub grading: GradeMode,
    pub inquire_all: bool,
    pub benchmark_items: usize,
    pub benchmark_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalConfig {
    pub model: String,
    /// Hash of `protocol`, shared by runs of different models that can be
    /// reported together.
    pub protocol_hash: String,
    pub protocol: ProtocolConfig,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: String,
    pub template: PromptTemplate,
    pub use_exemplar: bool,
    pub standard: StrikingStandard,
    pub grading: GradeMode,
    pub inquire_all: bool,
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub min_interval: Duration,
    pub resume: bool,
    /// Stop after this many new items; the journal is left resumable.
    pub limit: Option<usize>,
}

impl RunConfig {
    pub fn new(model: &str) -> Result<Self, HarnessError> {
        Ok(Self {
            model: model.to_string(),
            template: PromptTemplate::builtin(DEFAULT_TEMPLATE)?,
            use_exemplar: true,
            standard: StrikingStandard::default(),
            grading: GradeMode::default(),
            inquire_all: false,
            concurrency: 4,
            retry: RetryPolicy::default(),
            min_interval: Duration::ZERO,
            resume: false,
            limit: None,
        })
    }

    pub fn journal_config(&self, items: &[BenchmarkItem]) -> JournalConfig {
        let protocol = ProtocolConfig {
            template: self.template.name.clone(),
            template_digest: self.template.digest(),
            exemplar: self.use_exemplar,
            standard: self.standard,
            grading: self.grading,
            inquire_all: self.inquire_all,
            benchmark_items: items.len(),
            benchmark_digest: benchmark_digest(items),
        };
        JournalConfig {
            model: self.model.clone(),
            protocol_hash: config_hash(&protocol),
            protocol,
        }
    }
}

/// Order-sensitive hash of the benchmark items.
pub fn benchmark_digest(items: &[BenchmarkItem]) -> String {
    let mut h = Sha256::new();
    for item in items {
        h.update(serde_json::to_string(item).expect("item serializes").as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..16])
}

/// Plain-text rendering of a conversation, one block per message.
pub fn render_messages(messages: &[ChatMessage]) -> String {
    let mut out = String::new();
    for m in messages {
        let role = match m.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        out.push_str(&format!("[{role}]\n{}\n", m.content));
    }
    out
}

/// Appends the fixed inquiry to `prior` and returns the reply verbatim.
pub fn license_inquiry(
    client: &dyn ModelClient,
    model: &str,
    prior: &[ChatMessage],
    inquiry: &str,
    policy: &RetryPolicy,
    limiter: &RateLimiter,
) -> Result<ChatResponse, TransportError> {
    let mut messages = prior.to_vec();
    messages.push(ChatMessage::user(inquiry));
    chat_with_retries(client, &ChatRequest::new(model, messages), policy, limiter)
}

fn add_tokens(acc: &mut Option<u64>, v: Option<u64>) {
    if let Some(v) = v {
        *acc = Some(acc.unwrap_or(0) + v);
    }
}

fn other_mode(mode: GradeMode) -> GradeMode {
    match mode {
        GradeMode::Strict => GradeMode::Family,
        GradeMode::Family => GradeMode::Strict,
    }
}

/// Runs the protocol for one item. Transport failures end up in the
/// record's `error` field; nothing here aborts a run.
pub fn evaluate_item(client: &dyn ModelClient, item: &BenchmarkItem, cfg: &RunConfig, limiter: &RateLimiter) -> EvalRecord {
    let messages = build_completion_prompt(item, &cfg.template, cfg.use_exemplar);
    let mut rec = EvalRecord {
        snippet_id: item.snippet.id.clone(),
        model: cfg.model.clone(),
        license: item.license.clone(),
        category: item.category,
        prompt_text: render_messages(&messages),
        request_hash: messages_hash(&messages),
        raw_completion: String::new(),
        generated_body: String::new(),
        extraction: None,
        scores: None,
        verdict: None,
        inquiry_text: None,
        inquiry_response: None,
        grade: None,
        alternate_grade: None,
        latency_ms: 0,
        prompt_tokens: None,
        completion_tokens: None,
        error: None,
    };
    let first = match chat_with_retries(client, &ChatRequest::new(&cfg.model, messages.clone()), &cfg.retry, limiter) {
        Ok(r) => r,
        Err(e) => {
            rec.error = Some(format!("completion: {e}"));
            return rec;
        }
    };
    rec.latency_ms += first.latency_ms;
    add_tokens(&mut rec.prompt_tokens, first.prompt_tokens);
    add_tokens(&mut rec.completion_tokens, first.completion_tokens);

    let extracted = extract_generated_body(&first.text, &item.snippet.signature);
    let scores = similarity_report(&extracted.body, &item.snippet.body);
    let verdict = classify_striking(&item.snippet.metrics, &scores, &cfg.standard);
    let striking = verdict.is_striking;
    rec.raw_completion = first.text;
    rec.generated_body = extracted.body;
    rec.extraction = Some(extracted.path);
    rec.scores = Some(scores);
    rec.verdict = Some(verdict);

    if !(striking || cfg.inquire_all) {
        return rec;
    }
    let mut prior = messages;
    prior.push(ChatMessage::assistant(rec.raw_completion.clone()));
    rec.inquiry_text = Some(cfg.template.inquiry.clone());
    match license_inquiry(client, &cfg.model, &prior, &cfg.template.inquiry, &cfg.retry, limiter) {
        Ok(reply) => {
            rec.latency_ms += reply.latency_ms;
            add_tokens(&mut rec.prompt_tokens, reply.prompt_tokens);
            add_tokens(&mut rec.completion_tokens, reply.completion_tokens);
            if striking {
                let claimed = parse_license_mention(&reply.text);
                rec.grade = Some(grade_license_answer(&claimed, &item.license, cfg.grading));
                rec.alternate_grade = Some(grade_license_answer(&claimed, &item.license, other_mode(cfg.grading)));
            }
            rec.inquiry_response = Some(reply.text);
        }
        Err(e) => rec.error = Some(format!("inquiry: {e}")),
    }
    rec
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Journal contents after finalizing, sorted by snippet id.
    pub records: Vec<EvalRecord>,
    pub resumed: usize,
    pub processed: usize,
    /// Items left for a later `resume` because of `limit`.
    pub remaining: usize,
    pub config: JournalConfig,
}

/// Evaluates every benchmark item not yet in the journal with a bounded
/// worker pool, appending records through a single writer, then rewrites
/// the journal sorted by snippet id.
pub fn run_benchmark(
    client: &dyn ModelClient,
    items: &[BenchmarkItem],
    cfg: &RunConfig,
    journal_path: &Path,
) -> Result<RunOutcome, HarnessError> {
    let config = cfg.journal_config(items);
    let header = ArtifactHeader::new(JOURNAL_KIND, &config);
    let (mut writer, existing) = JournalWriter::open(journal_path, header, cfg.resume)?;
    let mut seen: BTreeSet<&str> = existing.iter().map(|r| r.snippet_id.as_str()).collect();
    let todo: Vec<&BenchmarkItem> = items.iter().filter(|i| seen.insert(i.snippet.id.as_str())).collect();
    let take = cfg.limit.map_or(todo.len(), |l| l.min(todo.len()));
    let batch = &todo[..take];

    let limiter = RateLimiter::new(cfg.min_interval);
    let next = AtomicUsize::new(0);
    let workers = cfg.concurrency.clamp(1, batch.len().max(1));
    let mut write_error = None;
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<EvalRecord>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, limiter) = (&next, &limiter);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = batch.get(i) else { break };
                if tx.send(evaluate_item(client, item, cfg, limiter)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for rec in rx {
            if write_error.is_none() {
                if let Err(e) = writer.append(&rec) {
                    log::error!("journal write failed: {e}");
                    // stop handing out work; in-flight items still drain
                    next.store(usize::MAX / 2, Ordering::Relaxed);
                    write_error = Some(e);
                }
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    let records = writer.finalize()?;
    Ok(RunOutcome {
        records,
        resumed: existing.len(),
        processed: batch.len(),
        remaining: todo.len() - batch.len(),
        config,
    })
}
