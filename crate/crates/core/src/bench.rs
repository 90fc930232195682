//! Benchmark construction and study-group sampling.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::ArtifactHeader;
use crate::corpus::Corpus;
use crate::index::{snippet_tokens, CorpusIndex, IndexError, DEFAULT_SEED, DEFAULT_UNSEEN_THRESHOLD};
use crate::license::{detect_header_license, LicenseCategory, LicenseTable};
use crate::score::stats::{compare, summarize, StatResult, StatsError, Summary};
use crate::similarity::StrikingStandard;
use crate::snippet::{eligibility_filter, function_name, EligibilityRules, FunctionSnippet, SnippetMetrics};

/// Case-insensitive phrases marking a snippet as taken from elsewhere.
pub const PROVENANCE_MARKERS: [&str; 3] = ["copied from", "taken from", "adapted from"];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot access {path}: {source}")]
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub top_k: usize,
    pub min_reuse: u64,
    pub seed: u64,
    /// Benchmark items must already clear the line, complexity and
    /// comment thresholds of this standard.
    pub standard: StrikingStandard,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            top_k: 100,
            min_reuse: 1,
            seed: DEFAULT_SEED,
            standard: StrikingStandard::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BenchmarkLine", from = "BenchmarkLine")]
pub struct BenchmarkItem {
    pub snippet: FunctionSnippet,
    pub license: String,
    pub category: LicenseCategory,
    pub reuse_count: u64,
}

/// On-disk form of a benchmark item.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkLine {
    id: String,
    header_comments: String,
    imports_globals: String,
    signature: String,
    docstring: String,
    body: String,
    license: String,
    category: LicenseCategory,
    metrics: SnippetMetrics,
    reuse_count: u64,
    source_path: String,
}

impl From<BenchmarkItem> for BenchmarkLine {
    fn from(item: BenchmarkItem) -> Self {
        let s = item.snippet;
        BenchmarkLine {
            id: s.id,
            header_comments: s.header_comments,
            imports_globals: s.imports_globals,
            signature: s.signature,
            docstring: s.docstring,
            body: s.body,
            license: item.license,
            category: item.category,
            metrics: s.metrics,
            reuse_count: item.reuse_count,
            source_path: s.source_path,
        }
    }
}

impl From<BenchmarkLine> for BenchmarkItem {
    fn from(l: BenchmarkLine) -> Self {
        let snippet = FunctionSnippet {
            name: function_name(&l.signature).unwrap_or_default(),
            id: l.id,
            header_comments: l.header_comments,
            imports_globals: l.imports_globals,
            signature: l.signature,
            docstring: l.docstring,
            body: l.body,
            source_path: l.source_path,
            line: 0,
            metrics: l.metrics,
            reuse_count: l.reuse_count,
            is_class_method: false,
            parent_id: None,
            syntax_ok: true,
            spans: None,
        };
        BenchmarkItem {
            snippet,
            license: l.license,
            category: l.category,
            reuse_count: l.reuse_count,
        }
    }
}

/// Counts after each pipeline stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub files: usize,
    pub files_single_license: usize,
    pub snippets: usize,
    pub after_preconditions: usize,
    pub after_markers: usize,
    pub after_dedup: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub items: Vec<BenchmarkItem>,
    pub stats: BuildStats,
    pub warnings: Vec<String>,
}

fn has_provenance_marker(text: &str) -> bool {
    let lower = text.to_lowercase();
    PROVENANCE_MARKERS.iter().any(|m| lower.contains(m))
}

fn meets_preconditions(s: &FunctionSnippet, std: &StrikingStandard) -> bool {
    s.syntax_ok
        && !s.is_class_method
        && s.parent_id.is_none()
        && s.metrics.body_lines > std.min_body_lines
        && s.metrics.cyclomatic_complexity > std.min_complexity
        && s.metrics.comment_count > std.min_identical_comments
}

/// Runs the benchmark pipeline over an ingested corpus. Items come out in
/// descending reuse order, ties broken by snippet id.
pub fn build_benchmark(corpus: &Corpus, cfg: &BenchConfig) -> BenchOutcome {
    let mut out = BenchOutcome::default();
    let warn_push = |out: &mut BenchOutcome, msg: String| {
        warn!("{msg}");
        out.warnings.push(msg);
    };
    out.stats.files = corpus.files.len();
    if corpus.files.is_empty() {
        warn_push(&mut out, "corpus is empty; benchmark is empty".into());
        return out;
    }

    let (snippets, _) = corpus.extract();
    out.stats.snippets = snippets.len();

    // license per file, from the header every snippet of that file shares
    let mut by_file: HashMap<String, Option<(String, LicenseCategory)>> = HashMap::new();
    let table = LicenseTable::builtin();
    for s in &snippets {
        by_file.entry(s.source_path.clone()).or_insert_with(|| {
            let finding = detect_header_license(&s.header_comments);
            match (finding.is_dual, finding.single()) {
                (false, Some(id)) => table.categorize(id).ok().map(|c| (id.to_string(), c)),
                _ => None,
            }
        });
    }
    out.stats.files_single_license = corpus
        .files
        .iter()
        .filter(|f| matches!(by_file.get(&f.path), Some(Some(_))))
        .count();

    let mut kept: Vec<(FunctionSnippet, String, LicenseCategory)> = snippets
        .into_iter()
        .filter(|s| s.reuse_count >= cfg.min_reuse)
        .filter_map(|s| {
            let lic = by_file.get(&s.source_path).cloned().flatten()?;
            Some((s, lic.0, lic.1))
        })
        .collect();
    kept.sort_by(|a, b| b.0.reuse_count.cmp(&a.0.reuse_count).then(a.0.id.cmp(&b.0.id)));

    kept.retain(|(s, _, _)| meets_preconditions(s, &cfg.standard));
    out.stats.after_preconditions = kept.len();
    kept.retain(|(s, _, _)| !has_provenance_marker(&s.full_text()));
    out.stats.after_markers = kept.len();

    let mut seen = HashSet::new();
    kept.retain(|(s, _, _)| {
        seen.insert((s.signature.trim().to_string(), s.docstring.trim().to_string()))
    });
    out.stats.after_dedup = kept.len();

    if kept.len() < cfg.top_k {
        warn_push(
            &mut out,
            format!("top_k = {} but only {} snippets qualify", cfg.top_k, kept.len()),
        );
    }
    kept.truncate(cfg.top_k);
    out.items = kept
        .into_iter()
        .map(|(snippet, license, category)| BenchmarkItem {
            reuse_count: snippet.reuse_count,
            snippet,
            license,
            category,
        })
        .collect();
    out.stats.emitted = out.items.len();
    out
}

/// Share of items per license category, in percent; sums to 100 for a
/// non-empty benchmark.
pub fn category_distribution(items: &[BenchmarkItem]) -> Vec<(LicenseCategory, usize, f64)> {
    [
        LicenseCategory::Permissive,
        LicenseCategory::WeakCopyleft,
        LicenseCategory::StrongCopyleft,
    ]
    .into_iter()
    .map(|c| {
        let n = items.iter().filter(|i| i.category == c).count();
        let pct = if items.is_empty() {
            0.0
        } else {
            100.0 * n as f64 / items.len() as f64
        };
        (c, n, pct)
    })
    .collect()
}

pub fn write_benchmark(path: &Path, items: &[BenchmarkItem], cfg: &BenchConfig) -> Result<(), BenchError> {
    let io = |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    ArtifactHeader::new("benchmark", cfg).write_line(&mut w).map_err(io)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_benchmark(path: &Path) -> Result<(Option<ArtifactHeader>, Vec<BenchmarkItem>), BenchError> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| BenchError::Io {
        path: name.clone(),
        source,
    })?;
    let mut header = None;
    let mut items = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| BenchError::Io {
            path: name.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Some(h) = ArtifactHeader::parse(&line) {
                header = Some(h);
                continue;
            }
        }
        let schema = |message: String| BenchError::Schema {
            path: name.clone(),
            line: i + 1,
            message,
        };
        let item: BenchmarkItem = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if !ids.insert(item.snippet.id.clone()) {
            return Err(schema(format!("duplicate id {}", item.snippet.id)));
        }
        items.push(item);
    }
    Ok((header, items))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub n_per_group: usize,
    pub seed: u64,
    pub jaccard_threshold: f64,
    pub eligibility: EligibilityRules,
    /// Drop a sample that is a near duplicate (exact Jaccard above the
    /// threshold) of one already drawn into the same group.
    pub dedup_within_groups: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_per_group: 200,
            seed: DEFAULT_SEED,
            jaccard_threshold: DEFAULT_UNSEEN_THRESHOLD,
            eligibility: EligibilityRules::default(),
            dedup_within_groups: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyGroups {
    pub accessed: Vec<FunctionSnippet>,
    pub unseen: Vec<FunctionSnippet>,
    pub sample_size: usize,
    pub warnings: Vec<String>,
}

fn shuffled_pool<'a>(
    pool: &'a [FunctionSnippet],
    rules: &EligibilityRules,
    exclude: &HashSet<&str>,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a FunctionSnippet> {
    let mut seen = HashSet::new();
    let mut v: Vec<&FunctionSnippet> = pool
        .iter()
        .filter(|s| eligibility_filter(s, rules) && !exclude.contains(s.id.as_str()))
        .collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v.retain(|s| seen.insert(s.id.as_str()));
    v.shuffle(rng);
    v
}

/// Samples the Accessed group from `accessed` and the Unseen group from
/// `restricted` snippets with no near duplicate in `index` (built over the
/// accessed corpus).
pub fn build_study_groups(
    accessed: &[FunctionSnippet],
    restricted: &[FunctionSnippet],
    index: &CorpusIndex,
    cfg: &StudyConfig,
) -> Result<StudyGroups, IndexError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut groups = StudyGroups {
        sample_size: cfg.n_per_group,
        ..Default::default()
    };

    let none = HashSet::new();
    let mut picked = CorpusIndex::new(index.seed())?;
    for s in shuffled_pool(accessed, &cfg.eligibility, &none, &mut rng) {
        if groups.accessed.len() == cfg.n_per_group {
            break;
        }
        let tokens = snippet_tokens(s);
        if cfg.dedup_within_groups {
            if let Some((_, j)) = picked.best_match(&tokens, None)? {
                if j > cfg.jaccard_threshold {
                    continue;
                }
            }
        }
        picked.insert(s.id.clone(), tokens)?;
        groups.accessed.push(s.clone());
    }

    let accessed_ids: HashSet<&str> = accessed.iter().map(|s| s.id.as_str()).collect();
    let mut picked = CorpusIndex::new(index.seed())?;
    for s in shuffled_pool(restricted, &cfg.eligibility, &accessed_ids, &mut rng) {
        if groups.unseen.len() == cfg.n_per_group {
            break;
        }
        let tokens = snippet_tokens(s);
        if let Some((_, j)) = index.best_match(&tokens, None)? {
            if j > cfg.jaccard_threshold {
                continue;
            }
        }
        if cfg.dedup_within_groups {
            if let Some((_, j)) = picked.best_match(&tokens, None)? {
                if j > cfg.jaccard_threshold {
                    continue;
                }
            }
        }
        picked.insert(s.id.clone(), tokens)?;
        groups.unseen.push(s.clone());
    }

    for (name, got) in [("accessed", groups.accessed.len()), ("unseen", groups.unseen.len())] {
        if got < cfg.n_per_group {
            let msg = format!("{name} group has {got} of {} requested samples", cfg.n_per_group);
            warn!("{msg}");
            groups.warnings.push(msg);
        }
    }
    Ok(groups)
}

pub const STUDY_FEATURES: [&str; 4] = ["prompt_lines", "body_lines", "complexity", "comments"];

fn feature(s: &FunctionSnippet, name: &str) -> f64 {
    let m = &s.metrics;
    match name {
        "prompt_lines" => m.prompt_lines as f64,
        "body_lines" => m.body_lines as f64,
        "complexity" => f64::from(m.cyclomatic_complexity),
        "comments" => m.comment_count as f64,
        _ => unreachable!("unknown feature {name}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: String,
    pub accessed: Summary,
    pub unseen: Summary,
    /// Accessed tested against Unseen.
    pub test: StatResult,
}

/// Per-feature summaries and Accessed-vs-Unseen tests.
pub fn feature_stats(groups: &StudyGroups) -> Result<Vec<FeatureRow>, StatsError> {
    STUDY_FEATURES
        .iter()
        .map(|&name| {
            let a: Vec<f64> = groups.accessed.iter().map(|s| feature(s, name)).collect();
            let u: Vec<f64> = groups.unseen.iter().map(|s| feature(s, name)).collect();
            Ok(FeatureRow {
                feature: name.to_string(),
                accessed: summarize(&a)?,
                unseen: summarize(&u)?,
                test: compare(&a, &u)?,
            })
        })
        .collect()
}

pub fn feature_table_markdown(rows: &[FeatureRow]) -> String {
    let mut out = String::from("| feature | group | min | median | mean | max |\n|---|---|---:|---:|---:|---:|\n");
    for r in rows {
        for (g, s) in [("Unseen", &r.unseen), ("Accessed", &r.accessed)] {
            out.push_str(&format!(
                "| {} | {g} | {} | {} | {:.1} | {} |\n",
                r.feature, s.min, s.median, s.mean, s.max
            ));
        }
    }
    out.push_str("\n| feature | U | p-value | Cliff's delta | effect |\n|---|---:|---:|---:|---|\n");
    for r in rows {
        let p = if r.test.p_value < 0.01 {
            "<0.01".to_string()
        } else {
            format!("{:.3}", r.test.p_value)
        };
        out.push_str(&format!(
            "| {} | {} | {p} | {:.2} | {:?} |\n",
            r.feature, r.test.u_statistic, r.test.cliffs_delta, r.test.effect_level
        ));
    }
    out
}
