//! TOML configuration file. Every key is optional; flags override it and
//! built-in defaults fill the rest.

use std::path::{Path, PathBuf};

use anyhow::Context;
use licokit_core::bench::{BenchConfig, StudyConfig};
use licokit_core::harness::{RetryPolicy, DEFAULT_TEMPLATE};
use licokit_core::license::GradeMode;
use licokit_core::score::LicoWeights;
use licokit_core::similarity::StrikingStandard;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub bench: BenchConfig,
    pub study: StudyConfig,
    pub run: RunSection,
    pub score: ScoreSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub replay: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub template: String,
    pub templates_file: Option<PathBuf>,
    pub exemplar: bool,
    pub inquire_all: bool,
    pub grading: GradeMode,
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub min_interval_ms: u64,
    pub timeout_secs: u64,
    pub standard: StrikingStandard,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            model: None,
            endpoint: None,
            replay: None,
            cache: None,
            template: DEFAULT_TEMPLATE.to_string(),
            templates_file: None,
            exemplar: true,
            inquire_all: false,
            grading: GradeMode::default(),
            concurrency: 4,
            retry: RetryPolicy::default(),
            min_interval_ms: 0,
            timeout_secs: 120,
            standard: StrikingStandard::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub weights: LicoWeights,
    pub grading: Option<GradeMode>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: FileConfig = toml::from_str("[run]\nmodel = \"m\"\nconcurrency = 2\n[bench]\ntop_k = 5\n").unwrap();
        assert_eq!(cfg.run.model.as_deref(), Some("m"));
        assert_eq!(cfg.run.concurrency, 2);
        assert!(cfg.run.exemplar);
        assert_eq!(cfg.bench.top_k, 5);
        assert_eq!(cfg.bench.min_reuse, BenchConfig::default().min_reuse);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[run]\nmodle = \"m\"\n").is_err());
    }
}
