//! Compliance scoring.
//!
//! LiCo = (w1 (1 - N) + w2 Acc_p + w3 Acc_c) / (w1 + w2 + w3), with
//! N = striking / benchmark size and weights (1, 2, 4). A missing accuracy
//! (no striking item in that category) counts as 1.

pub mod report;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("benchmark size must be positive")]
    EmptyBenchmark,
    #[error("striking count {n_striking} exceeds benchmark size {total}")]
    TooManyStriking { n_striking: usize, total: usize },
    #[error("accuracy {0} is outside [0, 1]")]
    BadAccuracy(f64),
    #[error("weights must be non-negative with a positive sum")]
    BadWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LicoWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for LicoWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 2.0,
            w3: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiCoScore {
    pub n_striking: usize,
    pub total_items: usize,
    /// `n_striking / total_items`.
    pub n: f64,
    /// Absent when the score was computed from accuracies alone.
    pub n_permissive: Option<usize>,
    pub n_copyleft: Option<usize>,
    pub acc_p: Option<f64>,
    pub acc_c: Option<f64>,
    pub acc_overall: Option<f64>,
    pub weights: LicoWeights,
    pub lico: f64,
}

pub fn lico(
    n_striking: usize,
    total: usize,
    acc_p: Option<f64>,
    acc_c: Option<f64>,
    weights: LicoWeights,
) -> Result<LiCoScore, ScoreError> {
    if total == 0 {
        return Err(ScoreError::EmptyBenchmark);
    }
    if n_striking > total {
        return Err(ScoreError::TooManyStriking { n_striking, total });
    }
    for a in [acc_p, acc_c].into_iter().flatten() {
        if !(0.0..=1.0).contains(&a) {
            return Err(ScoreError::BadAccuracy(a));
        }
    }
    let LicoWeights { w1, w2, w3 } = weights;
    if w1 < 0.0 || w2 < 0.0 || w3 < 0.0 || w1 + w2 + w3 <= 0.0 {
        return Err(ScoreError::BadWeights);
    }
    let n = n_striking as f64 / total as f64;
    let value = (w1 * (1.0 - n) + w2 * acc_p.unwrap_or(1.0) + w3 * acc_c.unwrap_or(1.0)) / (w1 + w2 + w3);
    Ok(LiCoScore {
        n_striking,
        total_items: total,
        n,
        n_permissive: None,
        n_copyleft: None,
        acc_p,
        acc_c,
        acc_overall: None,
        weights,
        lico: value.clamp(0.0, 1.0),
    })
}

/// Correct and total striking counts per category, for scoring from
/// tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrikingTally {
    pub n_permissive: usize,
    pub correct_permissive: usize,
    pub n_copyleft: usize,
    pub correct_copyleft: usize,
}

impl StrikingTally {
    pub fn score(&self, total: usize, weights: LicoWeights) -> Result<LiCoScore, ScoreError> {
        let ratio = |c: usize, n: usize| (n > 0).then(|| c as f64 / n as f64);
        let n_striking = self.n_permissive + self.n_copyleft;
        let mut s = lico(
            n_striking,
            total,
            ratio(self.correct_permissive, self.n_permissive),
            ratio(self.correct_copyleft, self.n_copyleft),
            weights,
        )?;
        s.n_permissive = Some(self.n_permissive);
        s.n_copyleft = Some(self.n_copyleft);
        s.acc_overall = ratio(self.correct_permissive + self.correct_copyleft, n_striking);
        Ok(s)
    }
}
