mod common;

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use common::{gen, replay};
use licokit_core::bench::BenchmarkItem;
use licokit_core::harness::{
    build_completion_prompt, evaluate_item, extract_generated_body, license_inquiry, read_journal, render_messages,
    run_benchmark, ChatMessage, ChatRequest, ChatResponse, ExtractionPath, HarnessError, ModelClient, PromptTemplate,
    RateLimiter, ReplayClient, ReplayEntry, RetryPolicy, Role, RunConfig, TransportError, DEFAULT_TEMPLATE,
};
use licokit_core::similarity::identical_comment_count;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn template() -> PromptTemplate {
    PromptTemplate::builtin(DEFAULT_TEMPLATE).unwrap()
}

fn config(model: &str) -> RunConfig {
    let mut cfg = RunConfig::new(model).unwrap();
    cfg.retry = RetryPolicy {
        max_retries: 2,
        base_delay_ms: 0,
        max_delay_ms: 0,
    };
    cfg
}

fn golden_prompt_text(item: &BenchmarkItem) -> String {
    render_messages(&build_completion_prompt(item, &template(), true))
}

#[test]
fn golden_prompt_matches_fixture() {
    let item = &gen::bench_items(1)[0];
    let expected = fs::read_to_string(Path::new(FIXTURES).join("prompt_item.golden.txt")).unwrap();
    assert_eq!(golden_prompt_text(item), expected);
}

#[test]
#[ignore = "regenerates the golden prompt; inspect the diff by hand"]
fn write_golden_prompt() {
    let item = &gen::bench_items(1)[0];
    fs::write(Path::new(FIXTURES).join("prompt_item.golden.txt"), golden_prompt_text(item)).unwrap();
}

#[test]
fn prompt_shapes() {
    let mut item = gen::bench_items(1).remove(0);
    let tpl = template();
    let single = build_completion_prompt(&item, &tpl, false);
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].role, Role::User);
    assert!(single[0].content.contains(&item.snippet.prompt_context()));
    assert!(!single[0].content.contains(&item.snippet.body));

    let with = build_completion_prompt(&item, &tpl, true);
    assert_eq!(with.iter().map(|m| m.role).collect::<Vec<_>>(), [Role::User, Role::Assistant, Role::User]);
    assert_eq!(with[2], single[0]);

    item.snippet.header_comments.clear();
    let bare = build_completion_prompt(&item, &tpl, false);
    let after_fence = bare[0].content.split("```python\n").nth(1).unwrap();
    assert!(after_fence.starts_with(&item.snippet.imports_globals));
    assert!(!bare[0].content.contains("```python\n\n"));
}

#[test]
fn two_function_completion_extracts_matching_body() {
    let raw = fs::read_to_string(Path::new(FIXTURES).join("two_functions.completion.md")).unwrap();
    let expected = fs::read_to_string(Path::new(FIXTURES).join("two_functions.expected_body.py")).unwrap();
    let got = extract_generated_body(&raw, "def parse_row(line, sep=\",\"):\n");
    assert_eq!(got.path, ExtractionPath::MatchedDefinition);
    assert_eq!(got.body, expected);
}

#[test]
fn inquiry_contracts() {
    let tpl = template();
    let policy = RetryPolicy {
        max_retries: 2,
        base_delay_ms: 0,
        max_delay_ms: 0,
    };
    let limiter = RateLimiter::unlimited();
    let prior = vec![ChatMessage::user("complete"), ChatMessage::assistant("    return 1\n")];
    let mut asked = prior.clone();
    asked.push(ChatMessage::user(tpl.inquiry.clone()));

    let c = ReplayClient::new([ReplayEntry::reply(&asked, "Apache-2.0")]);
    assert_eq!(license_inquiry(&c, "m", &prior, &tpl.inquiry, &policy, &limiter).unwrap().text, "Apache-2.0");

    let c = ReplayClient::new(vec![ReplayEntry::failure(&asked, "503"); 3]);
    assert!(license_inquiry(&c, "m", &prior, &tpl.inquiry, &policy, &limiter).is_err());

    // fails twice, then answers: within the retry budget
    let entries = vec![
        ReplayEntry::failure(&asked, "503"),
        ReplayEntry::failure(&asked, "503"),
        ReplayEntry::reply(&asked, "MIT"),
    ];
    let c = ReplayClient::new(entries);
    assert_eq!(license_inquiry(&c, "m", &prior, &tpl.inquiry, &policy, &limiter).unwrap().text, "MIT");
}

#[test]
fn empty_inquiry_reply_grades_incorrect_and_error_excludes_grade() {
    let items = gen::bench_items(2);
    let tpl = template();
    let cfg = config("m");
    let mut entries = replay::script(&items, &tpl, true, |_, it| replay::fenced(&it.snippet.body), |_, _| Some(String::new()));
    // second item: inquiry fails on every attempt
    let mut asked = build_completion_prompt(&items[1], &tpl, true);
    asked.push(ChatMessage::assistant(replay::fenced(&items[1].snippet.body)));
    asked.push(ChatMessage::user(tpl.inquiry.clone()));
    entries.retain(|e| e.hash != licokit_core::harness::messages_hash(&asked));
    entries.push(ReplayEntry::failure(&asked, "HTTP 500"));
    let client = ReplayClient::new(entries);
    let limiter = RateLimiter::unlimited();

    let ok = evaluate_item(&client, &items[0], &cfg, &limiter);
    assert!(ok.is_striking());
    assert_eq!(ok.inquiry_response.as_deref(), Some(""));
    let g = ok.grade.unwrap();
    assert!(!g.correct && g.claimed_ids.is_empty());

    let failed = evaluate_item(&client, &items[1], &cfg, &limiter);
    assert!(failed.is_striking());
    assert!(failed.grade.is_none());
    assert!(failed.error.as_deref().unwrap().contains("HTTP 500"));
}

/// Records every request; answers with the item body on the first turn.
struct Capturing {
    inner: ReplayClient,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ModelClient for Capturing {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        self.seen.lock().unwrap().push(request.clone());
        self.inner.chat(request)
    }
}

#[test]
fn echo_run_is_all_striking_with_one_inquiry_each() {
    let items = gen::bench_items(9);
    let tpl = template();
    let client = Capturing {
        inner: ReplayClient::new(replay::echo(&items, &tpl)),
        seen: Mutex::new(Vec::new()),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let out = run_benchmark(&client, &items, &config("model-x"), &path).unwrap();
    assert_eq!(out.records.len(), 9);
    for (rec, item) in out.records.iter().zip({
        let mut sorted = items.clone();
        sorted.sort_by(|a, b| a.snippet.id.cmp(&b.snippet.id));
        sorted
    }) {
        assert_eq!(rec.snippet_id, item.snippet.id);
        let s = rec.scores.unwrap();
        assert!(rec.is_striking());
        assert_eq!(s.max_sim, 1.0);
        assert_eq!(s.identical_comments, identical_comment_count(&item.snippet.body, &item.snippet.body));
        assert!(rec.grade.as_ref().unwrap().correct);
    }
    let seen = client.seen.lock().unwrap();
    assert_eq!(seen.len(), 18);
    assert!(seen.iter().all(|r| r.temperature == 0.0 && r.model == "model-x"));
    let inquiries = seen.iter().filter(|r| r.messages.last().unwrap().content == tpl.inquiry).count();
    assert_eq!(inquiries, 9);
}

#[test]
fn empty_completions_yield_no_striking_and_no_inquiry() {
    let items = gen::bench_items(6);
    let tpl = template();
    let client = Capturing {
        inner: ReplayClient::new(replay::script(&items, &tpl, true, |_, _| String::new(), |_, _| None)),
        seen: Mutex::new(Vec::new()),
    };
    let dir = tempfile::tempdir().unwrap();
    let out = run_benchmark(&client, &items, &config("m"), &dir.path().join("j.jsonl")).unwrap();
    assert!(out.records.iter().all(|r| !r.is_striking() && r.grade.is_none() && r.inquiry_text.is_none()));
    assert!(out.records.iter().all(|r| r.extraction == Some(ExtractionPath::Empty)));
    assert_eq!(client.seen.lock().unwrap().len(), 6);
}

fn mixed_replay(items: &[BenchmarkItem], tpl: &PromptTemplate) -> Vec<ReplayEntry> {
    replay::script(
        items,
        tpl,
        true,
        |i, it| match i % 3 {
            0 => replay::fenced(&it.snippet.body),
            1 => "    return None\n".to_string(),
            _ => format!("{}{}", it.snippet.signature, it.snippet.body),
        },
        |i, it| (i % 3 != 1).then(|| if i % 2 == 0 { it.license.clone() } else { "MIT".into() }),
    )
}

#[test]
fn interrupted_and_resumed_equals_uninterrupted() {
    let items = gen::bench_items(12);
    let tpl = template();
    let dir = tempfile::tempdir().unwrap();

    let full = dir.path().join("full.jsonl");
    run_benchmark(&ReplayClient::new(mixed_replay(&items, &tpl)), &items, &config("m"), &full).unwrap();

    let part = dir.path().join("part.jsonl");
    let mut cfg = config("m");
    cfg.limit = Some(5);
    cfg.concurrency = 3;
    let first = run_benchmark(&ReplayClient::new(mixed_replay(&items, &tpl)), &items, &cfg, &part).unwrap();
    assert_eq!((first.processed, first.remaining), (5, 7));
    // simulate a crash mid-write
    let mut text = fs::read_to_string(&part).unwrap();
    text.push_str("{\"snippet_id\": \"tor");
    fs::write(&part, text).unwrap();

    assert!(matches!(
        run_benchmark(&ReplayClient::new(mixed_replay(&items, &tpl)), &items, &cfg, &part),
        Err(HarnessError::JournalExists(_))
    ));
    cfg.resume = true;
    cfg.limit = None;
    let second = run_benchmark(&ReplayClient::new(mixed_replay(&items, &tpl)), &items, &cfg, &part).unwrap();
    assert_eq!((second.resumed, second.processed), (5, 7));
    assert_eq!(fs::read(&full).unwrap(), fs::read(&part).unwrap());

    let contents = read_journal(&part).unwrap();
    let striking: HashMap<_, _> = contents.records.iter().map(|r| (r.snippet_id.clone(), r.is_striking())).collect();
    assert_eq!(striking.values().filter(|s| **s).count(), 8);
    for r in &contents.records {
        assert_eq!(r.grade.is_some(), r.is_striking());
        assert_eq!(r.inquiry_text.is_some(), r.is_striking());
    }
}

#[test]
fn resume_under_changed_config_aborts() {
    let items = gen::bench_items(3);
    let tpl = template();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("j.jsonl");
    run_benchmark(&ReplayClient::new(replay::echo(&items, &tpl)), &items, &config("m"), &path).unwrap();
    let mut cfg = config("m");
    cfg.resume = true;
    cfg.standard.sim_threshold = 0.5;
    let err = run_benchmark(&ReplayClient::new(replay::echo(&items, &tpl)), &items, &cfg, &path).unwrap_err();
    assert!(matches!(err, HarnessError::ConfigMismatch { .. }), "{err}");
    // concurrency is not part of the config
    let mut cfg = config("m");
    cfg.resume = true;
    cfg.concurrency = 7;
    let out = run_benchmark(&ReplayClient::new(replay::echo(&items, &tpl)), &items, &cfg, &path).unwrap();
    assert_eq!((out.resumed, out.processed), (3, 0));
}

#[test]
fn missing_replay_entry_isolated_to_its_item() {
    let items = gen::bench_items(4);
    let tpl = template();
    let mut entries = replay::echo(&items, &tpl);
    let drop_hash = licokit_core::harness::messages_hash(&build_completion_prompt(&items[2], &tpl, true));
    entries.retain(|e| e.hash != drop_hash);
    let dir = tempfile::tempdir().unwrap();
    let out = run_benchmark(&ReplayClient::new(entries), &items, &config("m"), &dir.path().join("j.jsonl")).unwrap();
    let errs: Vec<_> = out.records.iter().filter(|r| r.error.is_some()).collect();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].snippet_id, items[2].snippet.id);
    assert!(errs[0].verdict.is_none());
    assert_eq!(out.records.iter().filter(|r| r.is_striking()).count(), 3);
}
