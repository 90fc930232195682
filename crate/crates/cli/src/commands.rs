use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use licokit_core::artifact::ArtifactHeader;
use licokit_core::bench::{
    build_benchmark, build_study_groups, category_distribution, feature_stats, feature_table_markdown, read_benchmark,
    write_benchmark, BenchError,
};
use licokit_core::corpus::{Corpus, CorpusError};
use licokit_core::harness::{
    build_completion_prompt, read_journal, render_messages, run_benchmark, CachedClient, HarnessError, HttpClient,
    JournalConfig, ModelClient, PromptTemplate, ReplayClient, RunConfig,
};
use licokit_core::index::{CorpusIndex, DEFAULT_SEED};
use licokit_core::score::report::{aggregate, apply_grading, emit_report};
use serde_json::{json, Value};

use crate::config::FileConfig;
use crate::{BuildBenchArgs, ExtractArgs, RunArgs, ScoreArgs, StudyArgs};

pub fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            return match h {
                HarnessError::ConfigMismatch { .. } => "config_mismatch",
                HarnessError::JournalExists(_) => "journal_exists",
                HarnessError::Schema { .. } => "schema",
                HarnessError::Template(_) => "template",
                HarnessError::Io { .. } => "io",
            };
        }
        if let Some(b) = cause.downcast_ref::<BenchError>() {
            return match b {
                BenchError::Schema { .. } => "schema",
                _ => "io",
            };
        }
        if let Some(c) = cause.downcast_ref::<CorpusError>() {
            return match c {
                CorpusError::Schema { .. } => "schema",
                _ => "io",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
    }
    "usage"
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let corpus = Corpus::ingest(path)?;
    for d in &corpus.diagnostics {
        log::warn!("{}: {}", d.path, d.message);
    }
    Ok(corpus)
}

pub fn extract(args: &ExtractArgs) -> Result<Value> {
    let corpus = load_corpus(&args.corpus)?;
    let (snippets, diagnostics) = corpus.extract();
    for d in &diagnostics {
        log::warn!("{}:{}: {}", d.path, d.line.unwrap_or(0), d.message);
    }
    let header = ArtifactHeader::new("snippets", &json!({ "files": corpus.files.len() }));
    let out = &args.output;
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    header.write_line(&mut w)?;
    for s in &snippets {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(json!({
        "files": corpus.files.len(),
        "snippets": snippets.len(),
        "diagnostics": corpus.diagnostics.len() + diagnostics.len(),
        "output": out,
        "config_hash": header.config_hash,
    }))
}

pub fn build_bench(args: &BuildBenchArgs, file: &FileConfig) -> Result<Value> {
    let mut cfg = file.bench.clone();
    cfg.top_k = args.top_k.unwrap_or(cfg.top_k);
    cfg.min_reuse = args.min_reuse.unwrap_or(cfg.min_reuse);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.standard.validate().map_err(|e| anyhow!("bench.standard: {e}"))?;
    let corpus = load_corpus(&args.corpus)?;
    let outcome = build_benchmark(&corpus, &cfg);
    write_benchmark(&args.output, &outcome.items, &cfg)?;
    let distribution: Vec<Value> = category_distribution(&outcome.items)
        .into_iter()
        .map(|(c, n, pct)| json!({ "category": c.as_str(), "count": n, "percent": pct }))
        .collect();
    Ok(json!({
        "items": outcome.items.len(),
        "stats": outcome.stats,
        "warnings": outcome.warnings,
        "distribution": distribution,
        "output": args.output,
        "config_hash": ArtifactHeader::new("benchmark", &cfg).config_hash,
    }))
}

pub fn study(args: &StudyArgs, file: &FileConfig) -> Result<Value> {
    let mut cfg = file.study.clone();
    cfg.n_per_group = args.n_per_group.unwrap_or(cfg.n_per_group);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.jaccard_threshold = args.jaccard_threshold.unwrap_or(cfg.jaccard_threshold);
    let (accessed, _) = load_corpus(&args.accessed)?.extract();
    let (restricted, _) = load_corpus(&args.restricted)?.extract();
    let index = CorpusIndex::from_snippets(&accessed, DEFAULT_SEED)?;
    let groups = build_study_groups(&accessed, &restricted, &index, &cfg)?;

    fs::create_dir_all(&args.output)?;
    let header = ArtifactHeader::new("study_groups", &cfg);
    let groups_path = args.output.join("groups.jsonl");
    let mut w = BufWriter::new(File::create(&groups_path)?);
    header.write_line(&mut w)?;
    for (name, group) in [("accessed", &groups.accessed), ("unseen", &groups.unseen)] {
        for s in group.iter() {
            serde_json::to_writer(&mut w, &json!({ "group": name, "snippet": s }))?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;

    let mut out = json!({
        "accessed": groups.accessed.len(),
        "unseen": groups.unseen.len(),
        "warnings": groups.warnings,
        "groups": groups_path,
        "config_hash": header.config_hash,
    });
    if groups.accessed.is_empty() || groups.unseen.is_empty() {
        out["features"] = Value::Null;
        return Ok(out);
    }
    let rows = feature_stats(&groups)?;
    let table = args.output.join("feature_table.md");
    fs::write(&table, feature_table_markdown(&rows))?;
    fs::write(args.output.join("feature_stats.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
    out["features"] = json!(table);
    Ok(out)
}

pub fn run(args: &RunArgs, file: &FileConfig) -> Result<Value> {
    let fc = &file.run;
    let (_, items) = read_benchmark(&args.benchmark)?;
    let template_name = args.template.as_deref().unwrap_or(&fc.template);
    let template = match args.templates_file.as_ref().or(fc.templates_file.as_ref()) {
        Some(p) => PromptTemplate::from_path(p, template_name)?,
        None => PromptTemplate::builtin(template_name)?,
    };
    let exemplar = fc.exemplar && !args.no_exemplar;

    if args.dry_run {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        for item in &items {
            writeln!(out, "=== {} ===", item.snippet.id)?;
            write!(out, "{}", render_messages(&build_completion_prompt(item, &template, exemplar)))?;
        }
        return Ok(json!({ "dry_run": true, "items": items.len(), "requests": 0 }));
    }

    let model = args
        .model
        .clone()
        .or_else(|| fc.model.clone())
        .ok_or_else(|| anyhow!("no model given; pass --model or set run.model in the config file"))?;
    let journal = args.output.as_ref().expect("clap requires --output without --dry-run");
    let mut cfg = RunConfig::new(&model)?;
    cfg.template = template;
    cfg.use_exemplar = exemplar;
    cfg.standard = fc.standard;
    cfg.standard.validate().map_err(|e| anyhow!("run.standard: {e}"))?;
    cfg.grading = args.grading.unwrap_or(fc.grading);
    cfg.inquire_all = args.inquire_all || fc.inquire_all;
    cfg.concurrency = args.concurrency.unwrap_or(fc.concurrency).max(1);
    cfg.retry = fc.retry;
    if let Some(r) = args.max_retries {
        cfg.retry.max_retries = r;
    }
    cfg.min_interval = Duration::from_millis(fc.min_interval_ms);
    cfg.resume = args.resume;
    cfg.limit = args.limit;

    let replay = args.replay.as_ref().or(if args.endpoint.is_some() { None } else { fc.replay.as_ref() });
    let endpoint = args.endpoint.as_ref().or(fc.endpoint.as_ref());
    let client: Box<dyn ModelClient> = match (replay, endpoint) {
        (Some(path), _) => Box::new(ReplayClient::from_path(path).with_context(|| format!("loading replay {}", path.display()))?),
        (None, Some(url)) => {
            let http = HttpClient::new(url, Duration::from_secs(fc.timeout_secs));
            match args.cache.as_ref().or(fc.cache.as_ref()) {
                Some(c) => Box::new(CachedClient::open(http, c)?),
                None => Box::new(http),
            }
        }
        (None, None) => bail!("no transport; pass --endpoint URL or --replay FILE"),
    };

    let outcome = run_benchmark(client.as_ref(), &items, &cfg, journal)?;
    let striking = outcome.records.iter().filter(|r| r.is_striking()).count();
    let errors = outcome.records.iter().filter(|r| r.error.is_some()).count();
    Ok(json!({
        "journal": journal,
        "model": model,
        "records": outcome.records.len(),
        "processed": outcome.processed,
        "resumed": outcome.resumed,
        "remaining": outcome.remaining,
        "striking": striking,
        "errors": errors,
        "protocol_hash": outcome.config.protocol_hash,
    }))
}

pub fn score(args: &ScoreArgs, file: &FileConfig) -> Result<Value> {
    let mut rows = Vec::new();
    let mut all_records = Vec::new();
    let mut protocols = BTreeSet::new();
    let mut gradings = BTreeSet::new();
    for path in &args.journals {
        let contents = read_journal(path)?;
        let jc: JournalConfig = serde_json::from_value(contents.header.config.clone())
            .with_context(|| format!("{}: journal header is not a run config", path.display()))?;
        let expected = jc.protocol.benchmark_items;
        let mut records = contents.records;
        if records.len() != expected && !args.force {
            bail!(
                "{} holds {} of {} records; finish it with `licokit run --resume` or pass --force",
                path.display(),
                records.len(),
                expected
            );
        }
        let grading = args.grading.or(file.score.grading).unwrap_or(jc.protocol.grading);
        apply_grading(&mut records, grading);
        protocols.insert(jc.protocol_hash.clone());
        gradings.insert(grading.to_string());
        rows.push(aggregate(&jc.model, &records, expected, file.score.weights)?);
        all_records.extend(records);
    }
    if protocols.len() > 1 && !args.force {
        bail!(
            "journals come from different run configurations ({}); pass --force to report them together",
            protocols.iter().cloned().collect::<Vec<_>>().join(", ")
        );
    }
    let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join("+");
    let note = format!("protocol_hash={} grading={}", join(&protocols), join(&gradings));
    let paths = emit_report(&args.output, &rows, &all_records, &note)?;
    Ok(json!({
        "rows": rows,
        "report_csv": paths.csv,
        "report_md": paths.markdown,
        "distributions_csv": paths.distributions,
        "note": note,
    }))
}
