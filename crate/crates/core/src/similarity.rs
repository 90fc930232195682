//! Text similarity between a generated body and its reference body.
//!
//! All three metrics run on code tokens from [`crate::lexer::tokenize`]:
//!
//! * BLEU-4: clipped n-gram precisions for n = 1..N with
//!   N = min(4, |candidate|, |reference|), uniform weights, and the usual
//!   brevity penalty. A zero precision is replaced by [`BLEU_EPSILON`].
//! * Jaccard over sets of 5-token shingles. A non-empty sequence shorter
//!   than 5 tokens is a single shingle.
//! * Token-level Levenshtein similarity, `1 - ED / max(|a|, |b|)`.
//!
//! Empty inputs: two empty sequences score 1.0 on every metric, one empty
//! sequence scores 0.0.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::lexer::{tokenize, TokenSequence};
use crate::snippet::{extract_body_comments, SnippetMetrics};

pub const BLEU_EPSILON: f64 = 1e-9;
pub const SHINGLE: usize = 5;

pub fn bleu4(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let (c, r) = (candidate.as_slice(), reference.as_slice());
    match (c.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let max_n = 4.min(c.len()).min(r.len());
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
        for g in r.windows(n) {
            *ref_counts.entry(g).or_insert(0) += 1;
        }
        let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
        for g in c.windows(n) {
            *cand_counts.entry(g).or_insert(0) += 1;
        }
        let clipped: usize = cand_counts
            .iter()
            .map(|(g, &k)| k.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        let total = c.len() + 1 - n;
        let p = clipped as f64 / total as f64;
        log_sum += if p > 0.0 { p.ln() } else { BLEU_EPSILON.ln() };
    }
    let bp = if c.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    (bp * (log_sum / max_n as f64).exp()).clamp(0.0, 1.0)
}

/// The set of 5-token shingles of a sequence.
pub fn shingles(tokens: &TokenSequence) -> HashSet<&[String]> {
    let t = tokens.as_slice();
    if t.is_empty() {
        HashSet::new()
    } else if t.len() < SHINGLE {
        HashSet::from([t])
    } else {
        t.windows(SHINGLE).collect()
    }
}

pub fn jaccard_5gram(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let a = shingles(candidate);
    let b = shingles(reference);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Unit-cost token Levenshtein distance.
pub fn edit_distance(a: &[String], b: &[String]) -> usize {
    if a.len() < b.len() {
        return edit_distance(b, a);
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn edit_similarity(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let longest = candidate.len().max(reference.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(candidate.as_slice(), reference.as_slice()) as f64 / longest as f64
}

pub fn identical_comment_count(generated_body: &str, reference_body: &str) -> usize {
    extract_body_comments(generated_body).intersection_count(&extract_body_comments(reference_body))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub bleu4: f64,
    pub jaccard: f64,
    pub edit_sim: f64,
    pub max_sim: f64,
    pub identical_comments: usize,
}

impl SimilarityScores {
    pub fn new(bleu4: f64, jaccard: f64, edit_sim: f64, identical_comments: usize) -> Self {
        Self {
            bleu4,
            jaccard,
            edit_sim,
            max_sim: bleu4.max(jaccard).max(edit_sim),
            identical_comments,
        }
    }
}

pub fn similarity_report(generated_body: &str, reference_body: &str) -> SimilarityScores {
    let cand = tokenize(generated_body);
    let refr = tokenize(reference_body);
    SimilarityScores::new(
        bleu4(&cand, &refr),
        jaccard_5gram(&cand, &refr),
        edit_similarity(&cand, &refr),
        identical_comment_count(generated_body, reference_body),
    )
}

/// Thresholds for a striking-similarity verdict. Every comparison is a
/// strict `>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrikingStandard {
    pub min_body_lines: usize,
    pub min_complexity: u32,
    pub sim_threshold: f64,
    pub min_identical_comments: usize,
}

impl Default for StrikingStandard {
    fn default() -> Self {
        Self {
            min_body_lines: 10,
            min_complexity: 3,
            sim_threshold: 0.6,
            min_identical_comments: 0,
        }
    }
}

impl StrikingStandard {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.sim_threshold) {
            return Err(format!("sim_threshold {} is outside [0, 1]", self.sim_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrikingCriterion {
    BodyLines,
    Complexity,
    Similarity,
    IdenticalComments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrikingVerdict {
    pub is_striking: bool,
    pub scores: SimilarityScores,
    pub reference_metrics: SnippetMetrics,
    pub standard: StrikingStandard,
    pub failed: Vec<StrikingCriterion>,
}

/// `reference_metrics` describe the ground-truth snippet, not the
/// generation.
pub fn classify_striking(
    reference_metrics: &SnippetMetrics,
    scores: &SimilarityScores,
    standard: &StrikingStandard,
) -> StrikingVerdict {
    let mut failed = Vec::new();
    if reference_metrics.body_lines <= standard.min_body_lines {
        failed.push(StrikingCriterion::BodyLines);
    }
    if reference_metrics.cyclomatic_complexity <= standard.min_complexity {
        failed.push(StrikingCriterion::Complexity);
    }
    if scores.max_sim.partial_cmp(&standard.sim_threshold) != Some(std::cmp::Ordering::Greater) {
        failed.push(StrikingCriterion::Similarity);
    }
    if scores.identical_comments <= standard.min_identical_comments {
        failed.push(StrikingCriterion::IdenticalComments);
    }
    StrikingVerdict {
        is_striking: failed.is_empty(),
        scores: *scores,
        reference_metrics: reference_metrics.clone(),
        standard: *standard,
        failed,
    }
}
