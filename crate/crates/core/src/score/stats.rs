//! Two-sample statistics: Mann-Whitney U and Cliff's delta.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Exact enumeration is used while the smaller sample has at most this
/// many observations.
pub const EXACT_MAX_SMALL: usize = 20;
/// and the pooled sample stays below this size (the exact DP is
/// quadratic in it).
pub const EXACT_MAX_POOLED: usize = 400;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample `{0}` is empty")]
    Empty(&'static str),
    #[error("sample `{0}` contains a non-finite value")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectLevel {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectLevel {
    pub fn from_delta(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            EffectLevel::Negligible
        } else if d < 0.33 {
            EffectLevel::Small
        } else if d < 0.474 {
            EffectLevel::Medium
        } else {
            EffectLevel::Large
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U for the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: PMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub u_statistic: f64,
    pub p_value: f64,
    pub cliffs_delta: f64,
    pub effect_level: EffectLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

fn check(sample: &[f64], name: &'static str) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::Empty(name));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(name));
    }
    Ok(())
}

pub fn summarize(sample: &[f64]) -> Result<Summary, StatsError> {
    check(sample, "sample")?;
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    Ok(Summary {
        min: v[0],
        median,
        mean: v.iter().sum::<f64>() / n as f64,
        max: v[n - 1],
    })
}

/// Doubled midranks of the pooled sample (`a` first, then `b`), so tied
/// ranks stay integral.
fn doubled_midranks(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut pooled: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1, doubled midrank = (i+1) + (j+1)
        let r = (i + j + 2) as u64;
        for item in &pooled[i..=j] {
            ranks[item.1] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Rank-sum U with midranks for ties. The two-sided p value is
/// `2 * min(P(U <= u), P(U >= u))`, capped at 1, from the exact
/// permutation distribution (conditional on the tie pattern) when the
/// smaller sample has at most 20 observations, else from the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    check(a, "a")?;
    check(b, "b")?;
    let (n1, n2) = (a.len(), b.len());
    let (ranks, ties) = doubled_midranks(a, b);
    let r1_doubled: u64 = ranks[..n1].iter().sum();
    let u = r1_doubled as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1.min(n2) <= EXACT_MAX_SMALL && n1 + n2 <= EXACT_MAX_POOLED {
        let p = exact_p(&ranks, n1, r1_doubled);
        return Ok(MannWhitney {
            u,
            p_value: p,
            method: PMethod::Exact,
        });
    }

    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term);
    let mu = n1f * n2f / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_value: p,
        method: PMethod::Normal,
    })
}

/// Counts, over all ways to pick `k` of the pooled ranks, how many give
/// each doubled rank sum, then compares the observed sum on both tails.
fn exact_p(ranks: &[u64], k: usize, observed: u64) -> f64 {
    let max_sum: u64 = {
        let mut r = ranks.to_vec();
        r.sort_unstable_by(|x, y| y.cmp(x));
        r[..k].iter().sum()
    };
    let width = max_sum as usize + 1;
    // dp[j][s]: ways to choose j ranks with doubled sum s
    let mut dp = vec![vec![0f64; width]; k + 1];
    dp[0][0] = 1.0;
    for &r in ranks {
        let r = r as usize;
        for j in (1..=k).rev() {
            let (lo, hi) = dp.split_at_mut(j);
            let prev = &lo[j - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let counts = &dp[k];
    let total: f64 = counts.iter().sum();
    let obs = observed as usize;
    let lower: f64 = counts[..=obs.min(width - 1)].iter().sum();
    let upper: f64 = counts[obs.min(width)..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// `(#(a > b) - #(a < b)) / (|a| |b|)` and its effect level.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<(f64, EffectLevel), StatsError> {
    check(a, "a")?;
    check(b, "b")?;
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut diff: i64 = 0;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x) as i64;
        let above = (sorted.len() - sorted.partition_point(|&y| y <= x)) as i64;
        diff += below - above;
    }
    let delta = diff as f64 / (a.len() * b.len()) as f64;
    Ok((delta, EffectLevel::from_delta(delta)))
}

pub fn compare(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    let mw = mann_whitney_u(a, b)?;
    let (delta, level) = cliffs_delta(a, b)?;
    Ok(StatResult {
        u_statistic: mw.u,
        p_value: mw.p_value,
        cliffs_delta: delta,
        effect_level: level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_example() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert_eq!(r.method, PMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_have_p_one() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(mann_whitney_u(&a, &a).unwrap().p_value, 1.0);
        let big: Vec<f64> = (0..60).map(|i| (i % 7) as f64).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ties_use_midranks() {
        // pooled 1,1,2,2 -> midranks 1.5,1.5,3.5,3.5
        let r = mann_whitney_u(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.u, 2.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn all_constant_normal_branch() {
        let a = vec![2.0; 30];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn empty_and_nan_rejected() {
        assert_eq!(mann_whitney_u(&[], &[1.0]), Err(StatsError::Empty("a")));
        assert!(cliffs_delta(&[1.0], &[]).is_err());
        assert!(cliffs_delta(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn cliffs_examples() {
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), (-1.0, EffectLevel::Large));
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), (0.0, EffectLevel::Negligible));
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), (-0.25, EffectLevel::Small));
    }

    #[test]
    fn effect_thresholds() {
        assert_eq!(EffectLevel::from_delta(-0.10), EffectLevel::Negligible);
        assert_eq!(EffectLevel::from_delta(0.147), EffectLevel::Small);
        assert_eq!(EffectLevel::from_delta(-0.33), EffectLevel::Medium);
        assert_eq!(EffectLevel::from_delta(0.474), EffectLevel::Large);
    }

    #[test]
    fn summary() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.median, s.mean, s.max), (1.0, 2.5, 2.5, 4.0));
    }
}
