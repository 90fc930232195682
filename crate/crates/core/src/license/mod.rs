//! License identification from header comments and free-form text.
//!
//! Rules live in `data/licenses.toml` (embedded at build time, or loaded
//! from a path with [`LicenseTable::from_path`]). Matching runs over a
//! normalized form of the input: comment leaders stripped, lower-cased,
//! all whitespace (line breaks included) collapsed to single spaces, so a
//! phrase matches regardless of where it was wrapped.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_TABLE: &str = include_str!("../../data/licenses.toml");

#[derive(Debug, Error)]
pub enum LicenseError {
    #[error("unknown license id `{id}`; supported: {supported}")]
    UnknownId { id: String, supported: String },
    #[error("invalid license table: {0}")]
    Table(String),
    #[error("cannot read license table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LicenseCategory {
    Permissive,
    WeakCopyleft,
    StrongCopyleft,
}

impl LicenseCategory {
    pub fn is_copyleft(self) -> bool {
        !matches!(self, LicenseCategory::Permissive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LicenseCategory::Permissive => "Permissive",
            LicenseCategory::WeakCopyleft => "WeakCopyleft",
            LicenseCategory::StrongCopyleft => "StrongCopyleft",
        }
    }
}

impl fmt::Display for LicenseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradeMode {
    Strict,
    #[default]
    Family,
}

impl FromStr for GradeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(GradeMode::Strict),
            "family" => Ok(GradeMode::Family),
            other => Err(format!("unknown grading mode `{other}` (expected strict or family)")),
        }
    }
}

impl fmt::Display for GradeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradeMode::Strict => "strict",
            GradeMode::Family => "family",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleTier {
    Tag,
    Phrase,
    Keyword,
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseFinding {
    pub spdx_ids: Vec<String>,
    pub is_dual: bool,
    pub evidence: Vec<Evidence>,
}

impl LicenseFinding {
    /// The id when exactly one license was found.
    pub fn single(&self) -> Option<&str> {
        match self.spdx_ids.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeResult {
    pub claimed_ids: Vec<String>,
    pub correct: bool,
    pub mode: GradeMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LicenseInfo {
    pub spdx: String,
    pub category: LicenseCategory,
    pub family: String,
    pub version: String,
    pub subsumes: Vec<String>,
    pub deprecated: Vec<String>,
}

impl LicenseInfo {
    fn major_version(&self) -> &str {
        self.version.split('.').next().unwrap_or("")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    #[allow(dead_code)]
    version: u32,
    license: Vec<RawLicense>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLicense {
    spdx: String,
    category: LicenseCategory,
    family: String,
    #[serde(default)]
    version: String,
    #[serde(default)]
    subsumes: Vec<String>,
    #[serde(default)]
    deprecated: Vec<String>,
    #[serde(default, rename = "rule")]
    rules: Vec<RawRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    name: String,
    tier: RuleTier,
    pattern: String,
}

#[derive(Debug)]
struct CompiledRule {
    name: String,
    tier: RuleTier,
    license: usize,
    regex: Regex,
}

/// Read-only rule table; build once and share.
#[derive(Debug)]
pub struct LicenseTable {
    licenses: Vec<LicenseInfo>,
    rules: Vec<CompiledRule>,
    /// Lower-cased SPDX id or deprecated spelling → license index.
    ids: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy)]
struct Hit<'r> {
    start: usize,
    end: usize,
    license: usize,
    tier: RuleTier,
    rule: &'r str,
}

impl LicenseTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static LicenseTable {
        static TABLE: OnceLock<LicenseTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            LicenseTable::from_toml(BUILTIN_TABLE).expect("embedded license table is valid")
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, LicenseError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LicenseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, LicenseError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| LicenseError::Table(e.to_string()))?;
        let mut licenses = Vec::new();
        let mut rules = Vec::new();
        let mut ids = HashMap::new();
        for (idx, lic) in raw.license.into_iter().enumerate() {
            for name in std::iter::once(&lic.spdx).chain(&lic.deprecated) {
                if ids.insert(name.to_ascii_lowercase(), idx).is_some() {
                    return Err(LicenseError::Table(format!("duplicate license id `{name}`")));
                }
            }
            for rule in lic.rules {
                if rule.tier == RuleTier::Tag {
                    return Err(LicenseError::Table(format!(
                        "rule `{}`: tag rules are built in",
                        rule.name
                    )));
                }
                let regex = RegexBuilder::new(&rule.pattern)
                    .case_insensitive(true)
                    .build()
                    .map_err(|e| LicenseError::Table(format!("rule `{}`: {e}", rule.name)))?;
                rules.push(CompiledRule {
                    name: rule.name,
                    tier: rule.tier,
                    license: idx,
                    regex,
                });
            }
            licenses.push(LicenseInfo {
                spdx: lic.spdx,
                category: lic.category,
                family: lic.family,
                version: lic.version,
                subsumes: lic.subsumes,
                deprecated: lic.deprecated,
            });
        }
        for lic in &licenses {
            for s in &lic.subsumes {
                if !licenses.iter().any(|l| &l.spdx == s) {
                    return Err(LicenseError::Table(format!(
                        "`{}` subsumes unknown id `{s}`",
                        lic.spdx
                    )));
                }
            }
        }
        Ok(LicenseTable { licenses, rules, ids })
    }

    pub fn licenses(&self) -> &[LicenseInfo] {
        &self.licenses
    }

    pub fn supported_ids(&self) -> impl Iterator<Item = &str> {
        self.licenses.iter().map(|l| l.spdx.as_str())
    }

    /// Canonical id for an SPDX id or deprecated spelling, any case.
    pub fn canonical(&self, id: &str) -> Option<&str> {
        self.lookup(id).map(|i| self.licenses[i].spdx.as_str())
    }

    pub fn info(&self, id: &str) -> Option<&LicenseInfo> {
        self.lookup(id).map(|i| &self.licenses[i])
    }

    fn lookup(&self, id: &str) -> Option<usize> {
        self.ids.get(&id.trim().to_ascii_lowercase()).copied()
    }

    pub fn categorize(&self, id: &str) -> Result<LicenseCategory, LicenseError> {
        self.info(id)
            .map(|l| l.category)
            .ok_or_else(|| LicenseError::UnknownId {
                id: id.to_string(),
                supported: self.supported_ids().collect::<Vec<_>>().join(", "),
            })
    }

    /// SPDX tags win outright; otherwise phrase and keyword rules are
    /// combined, overlapping matches resolved in favour of the longer one,
    /// and subsumed ids dropped.
    pub fn detect_header(&self, header: &str) -> LicenseFinding {
        let tagged = self.tag_hits(header);
        if !tagged.is_empty() {
            let mut finding = LicenseFinding::default();
            for (license, line) in tagged {
                let id = &self.licenses[license].spdx;
                if !finding.spdx_ids.contains(id) {
                    finding.spdx_ids.push(id.clone());
                }
                finding.evidence.push(Evidence {
                    rule: "spdx-tag".into(),
                    line,
                });
            }
            finding.is_dual = finding.spdx_ids.len() >= 2;
            return finding;
        }

        let norm = Normalized::new(header);
        let hits = self.rule_hits(&norm.text, &[RuleTier::Phrase, RuleTier::Keyword]);
        let hits = resolve_overlaps(hits);
        let mut order: Vec<usize> = Vec::new();
        for h in &hits {
            if !order.contains(&h.license) {
                order.push(h.license);
            }
        }
        let dropped: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| {
                order.iter().any(|&j| {
                    j != i && self.licenses[j].subsumes.contains(&self.licenses[i].spdx)
                })
            })
            .collect();
        let spdx_ids: Vec<String> = order
            .iter()
            .filter(|i| !dropped.contains(i))
            .map(|&i| self.licenses[i].spdx.clone())
            .collect();
        let evidence = hits
            .iter()
            .filter(|h| !dropped.contains(&h.license))
            .map(|h| Evidence {
                rule: h.rule.to_string(),
                line: norm.line_of(h.start),
            })
            .collect();
        LicenseFinding {
            is_dual: spdx_ids.len() >= 2,
            spdx_ids,
            evidence,
        }
    }

    /// Ids mentioned anywhere in `text`, in order of first mention.
    pub fn parse_mention(&self, text: &str) -> Vec<String> {
        let norm = Normalized::new(text);
        let mut hits = self.rule_hits(
            &norm.text,
            &[RuleTier::Phrase, RuleTier::Keyword, RuleTier::Alias],
        );
        hits.extend(self.bare_id_hits(&norm.text));
        let mut out: Vec<(usize, String)> = Vec::new();
        for h in resolve_overlaps(hits) {
            let id = &self.licenses[h.license].spdx;
            if !out.iter().any(|(_, o)| o == id) {
                out.push((h.start, id.clone()));
            }
        }
        // Tags are line-oriented and looked up on the raw text.
        for (license, _) in self.tag_hits(text) {
            let id = &self.licenses[license].spdx;
            if !out.iter().any(|(_, o)| o == id) {
                out.push((usize::MAX, id.clone()));
            }
        }
        out.into_iter().map(|(_, id)| id).collect()
    }

    pub fn grade(&self, claimed: &[String], truth: &str, mode: GradeMode) -> GradeResult {
        let mut distinct: Vec<String> = Vec::new();
        for c in claimed {
            let id = self.canonical(c).unwrap_or(c).to_string();
            if !distinct.contains(&id) {
                distinct.push(id);
            }
        }
        let truth_id = self.canonical(truth).unwrap_or(truth);
        let correct = match mode {
            GradeMode::Strict => distinct.len() == 1 && distinct[0] == truth_id,
            GradeMode::Family => {
                let mut keys: Vec<(String, String)> = Vec::new();
                for id in &distinct {
                    let key = self.family_key(id);
                    if !keys.contains(&key) {
                        keys.push(key);
                    }
                }
                keys.len() == 1 && keys[0] == self.family_key(truth_id)
            }
        };
        GradeResult {
            claimed_ids: claimed.to_vec(),
            correct,
            mode,
        }
    }

    fn family_key(&self, id: &str) -> (String, String) {
        match self.info(id) {
            Some(l) => (l.family.clone(), l.major_version().to_string()),
            None => (id.to_string(), String::new()),
        }
    }

    fn rule_hits(&self, text: &str, tiers: &[RuleTier]) -> Vec<Hit<'_>> {
        let mut hits = Vec::new();
        for rule in self.rules.iter().filter(|r| tiers.contains(&r.tier)) {
            for m in rule.regex.find_iter(text) {
                hits.push(Hit {
                    start: m.start(),
                    end: m.end(),
                    license: rule.license,
                    tier: rule.tier,
                    rule: &rule.name,
                });
            }
        }
        hits
    }

    fn bare_id_hits(&self, text: &str) -> Vec<Hit<'_>> {
        static WORD: OnceLock<Regex> = OnceLock::new();
        let word = WORD.get_or_init(|| Regex::new(r"[A-Za-z0-9.+-]+").unwrap());
        word.find_iter(text)
            .filter_map(|m| {
                let trimmed = m.as_str().trim_end_matches(['.', '-']);
                self.lookup(trimmed).map(|license| Hit {
                    start: m.start(),
                    end: m.start() + trimmed.len(),
                    license,
                    tier: RuleTier::Tag,
                    rule: "bare-id",
                })
            })
            .collect()
    }

    /// `(license, line)` for each recognized id in SPDX-License-Identifier
    /// lines. Exception clauses (`WITH ...`) are ignored.
    fn tag_hits(&self, text: &str) -> Vec<(usize, usize)> {
        static TAG: OnceLock<Regex> = OnceLock::new();
        let tag = TAG.get_or_init(|| {
            RegexBuilder::new(r"spdx-license-identifier\s*:\s*(.*)$")
                .case_insensitive(true)
                .build()
                .unwrap()
        });
        let mut out = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let Some(caps) = tag.captures(line) else {
                continue;
            };
            let expr = caps[1]
                .split("*/")
                .next()
                .unwrap_or("")
                .trim_end_matches(['"', '\'', ' ', '\t']);
            let mut words = expr
                .split(|c: char| c.is_whitespace() || c == '(' || c == ')')
                .filter(|w| !w.is_empty());
            while let Some(w) = words.next() {
                if w.eq_ignore_ascii_case("with") {
                    words.next();
                    continue;
                }
                if let Some(license) = self.lookup(w.trim_end_matches([',', ';'])) {
                    out.push((license, line_no));
                }
            }
        }
        out
    }
}

/// Keeps the earliest match, preferring the longest (then the higher tier)
/// among matches starting at the same offset, and drops anything that
/// overlaps an already kept match.
fn resolve_overlaps(mut hits: Vec<Hit<'_>>) -> Vec<Hit<'_>> {
    hits.sort_by(|a, b| {
        a.start
            .cmp(&b.start)
            .then(b.end.cmp(&a.end))
            .then(tier_rank(a.tier).cmp(&tier_rank(b.tier)))
            .then(a.license.cmp(&b.license))
    });
    let mut kept: Vec<Hit<'_>> = Vec::new();
    for h in hits {
        if kept.iter().all(|k| h.start >= k.end || h.end <= k.start) {
            kept.push(h);
        }
    }
    kept
}

fn tier_rank(t: RuleTier) -> u8 {
    match t {
        RuleTier::Tag => 0,
        RuleTier::Phrase => 1,
        RuleTier::Keyword => 2,
        RuleTier::Alias => 3,
    }
}

/// Normalized single-line text plus the byte offset at which each source
/// line starts.
struct Normalized {
    text: String,
    line_starts: Vec<(usize, usize)>,
}

impl Normalized {
    fn new(raw: &str) -> Self {
        let mut text = String::with_capacity(raw.len());
        let mut line_starts = Vec::new();
        for (line_no, line) in raw.lines().enumerate() {
            let body = strip_comment_leader(line);
            if body.is_empty() {
                continue;
            }
            if !text.is_empty() {
                text.push(' ');
            }
            line_starts.push((text.len(), line_no));
            let mut first = true;
            for word in body.split_whitespace() {
                if !first {
                    text.push(' ');
                }
                first = false;
                text.push_str(&word.to_lowercase());
            }
        }
        Normalized { text, line_starts }
    }

    fn line_of(&self, offset: usize) -> usize {
        let idx = self.line_starts.partition_point(|&(start, _)| start <= offset);
        idx.checked_sub(1).map_or(0, |i| self.line_starts[i].1)
    }
}

fn strip_comment_leader(line: &str) -> &str {
    const LEADERS: &[char] = &['#', '*', '/', '"', '\'', '!', ';'];
    line.trim()
        .trim_start_matches(|c: char| c.is_whitespace() || LEADERS.contains(&c))
        .trim_end_matches(|c: char| c.is_whitespace() || LEADERS.contains(&c))
}

pub fn detect_header_license(header: &str) -> LicenseFinding {
    LicenseTable::builtin().detect_header(header)
}

pub fn categorize(spdx_id: &str) -> Result<LicenseCategory, LicenseError> {
    LicenseTable::builtin().categorize(spdx_id)
}

pub fn parse_license_mention(text: &str) -> Vec<String> {
    LicenseTable::builtin().parse_mention(text)
}

pub fn grade_license_answer(claimed: &[String], truth: &str, mode: GradeMode) -> GradeResult {
    LicenseTable::builtin().grade(claimed, truth, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    const APACHE: &str = "\
# Copyright 2020 Example Authors
#
# Licensed under the Apache License, Version 2.0 (the \"License\");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
";

    const GPL2_PLUS: &str = "\
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
";

    const MIT: &str = "\
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the \"Software\"), to deal
";

    const GPL3: &str = "\
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
";

    const BSD3: &str = "\
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
# * Neither the name of the copyright holder nor the names of its
#   contributors may be used to endorse or promote products derived from
#   this software without specific prior written permission.
";

    #[test]
    fn builtin_table_loads_and_covers_required_ids() {
        let t = LicenseTable::builtin();
        for id in [
            "MIT",
            "BSD-2-Clause",
            "BSD-3-Clause",
            "Apache-2.0",
            "ISC",
            "MPL-2.0",
            "LGPL-2.1-only",
            "LGPL-2.1-or-later",
            "LGPL-3.0-only",
            "LGPL-3.0-or-later",
            "GPL-2.0-only",
            "GPL-2.0-or-later",
            "GPL-3.0-only",
            "GPL-3.0-or-later",
            "AGPL-3.0-only",
            "AGPL-3.0-or-later",
        ] {
            assert_eq!(t.canonical(id), Some(id));
        }
    }

    #[test]
    fn spdx_tag() {
        let f = detect_header_license("# SPDX-License-Identifier: Apache-2.0\n");
        assert_eq!(f.spdx_ids, ids(&["Apache-2.0"]));
        assert!(!f.is_dual);
        assert_eq!(f.evidence[0].rule, "spdx-tag");
    }

    #[test]
    fn spdx_tag_overrides_text_and_handles_expressions() {
        let text = format!("{MIT}# SPDX-License-Identifier: (GPL-2.0+ OR MIT) WITH Classpath-exception-2.0\n");
        let f = detect_header_license(&text);
        assert_eq!(f.spdx_ids, ids(&["GPL-2.0-or-later", "MIT"]));
        assert!(f.is_dual);
        let f = detect_header_license("// SPDX-License-Identifier: GPL-2.0 */");
        assert_eq!(f.spdx_ids, ids(&["GPL-2.0-only"]));
    }

    #[test]
    fn apache_title_line() {
        let f = detect_header_license(APACHE);
        assert_eq!(f.spdx_ids, ids(&["Apache-2.0"]));
        assert!(f.evidence.iter().all(|e| e.line == 2 || e.line == 6));
    }

    #[test]
    fn or_later_clause_maps_to_or_later() {
        assert_eq!(detect_header_license(GPL2_PLUS).spdx_ids, ids(&["GPL-2.0-or-later"]));
        assert_eq!(detect_header_license(GPL3).spdx_ids, ids(&["GPL-3.0-or-later"]));
        let only = "# under the terms of the GNU General Public License version 2 as\n# published by the Free Software Foundation.\n";
        assert_eq!(detect_header_license(only).spdx_ids, ids(&["GPL-2.0-only"]));
    }

    #[test]
    fn mit_plus_gpl_is_dual() {
        let f = detect_header_license(&format!("{MIT}#\n{GPL3}"));
        assert!(f.is_dual);
        assert_eq!(f.spdx_ids, ids(&["MIT", "GPL-3.0-or-later"]));
    }

    #[test]
    fn bsd3_subsumes_bsd2() {
        let f = detect_header_license(BSD3);
        assert_eq!(f.spdx_ids, ids(&["BSD-3-Clause"]));
        assert!(!f.is_dual);
        let f = detect_header_license(&BSD3.lines().take(2).collect::<Vec<_>>().join("\n"));
        assert_eq!(f.spdx_ids, ids(&["BSD-2-Clause"]));
    }

    #[test]
    fn lesser_and_affero_are_not_gpl() {
        let lgpl = "# GNU Lesser General Public License as published by the Free Software\n# Foundation; either version 2.1 of the License, or (at your option) any later version.\n";
        assert_eq!(detect_header_license(lgpl).spdx_ids, ids(&["LGPL-2.1-or-later"]));
        let agpl = "# it under the terms of the GNU Affero General Public License as published\n# by the Free Software Foundation, version 3.\n";
        assert_eq!(detect_header_license(agpl).spdx_ids, ids(&["AGPL-3.0-only"]));
    }

    #[test]
    fn docstring_and_block_comment_leaders() {
        let doc = "\"\"\"\nThis Source Code Form is subject to the terms of the Mozilla Public\nLicense, v. 2.0.\n\"\"\"\n";
        assert_eq!(detect_header_license(doc).spdx_ids, ids(&["MPL-2.0"]));
        let block = "/*\n * Permission to use, copy, modify, and/or distribute this software for any\n * purpose with or without fee is hereby granted.\n */\n";
        assert_eq!(detect_header_license(block).spdx_ids, ids(&["ISC"]));
    }

    #[test]
    fn empty_header_is_empty_finding() {
        let f = detect_header_license("");
        assert!(f.spdx_ids.is_empty() && !f.is_dual && f.evidence.is_empty());
        assert!(detect_header_license("# Copyright MIT Media Lab\n").spdx_ids.is_empty());
    }

    #[test]
    fn categories() {
        assert_eq!(categorize("Apache-2.0").unwrap(), LicenseCategory::Permissive);
        assert_eq!(categorize("MPL-2.0").unwrap(), LicenseCategory::WeakCopyleft);
        assert_eq!(categorize("LGPL-3.0-or-later").unwrap(), LicenseCategory::WeakCopyleft);
        assert_eq!(categorize("GPL-3.0-or-later").unwrap(), LicenseCategory::StrongCopyleft);
        assert_eq!(categorize("AGPL-3.0-only").unwrap(), LicenseCategory::StrongCopyleft);
        let err = categorize("WTFPL").unwrap_err().to_string();
        assert!(err.contains("WTFPL") && err.contains("Apache-2.0"));
    }

    #[test]
    fn mentions() {
        assert_eq!(parse_license_mention("This code is under the Apache License 2.0"), ids(&["Apache-2.0"]));
        assert!(parse_license_mention("no specific license").is_empty());
        assert_eq!(parse_license_mention("MIT or GPLv2"), ids(&["MIT", "GPL-2.0-only"]));
        assert_eq!(parse_license_mention("GPLv3"), ids(&["GPL-3.0-only"]));
        assert_eq!(parse_license_mention("It is GPL-2.0-or-later."), ids(&["GPL-2.0-or-later"]));
        assert_eq!(parse_license_mention("gplv2+"), ids(&["GPL-2.0-or-later"]));
        assert_eq!(parse_license_mention("licensed as LGPLv3"), ids(&["LGPL-3.0-only"]));
        assert_eq!(
            parse_license_mention("Dual: BSD-3-Clause / Apache-2.0. MIT too; MIT again."),
            ids(&["BSD-3-Clause", "Apache-2.0", "MIT"])
        );
        assert!(parse_license_mention("The Apache Software Foundation ships this.").is_empty());
    }

    #[test]
    fn grading_modes() {
        let t = LicenseTable::builtin();
        let g = t.grade(&ids(&["Apache-2.0"]), "Apache-2.0", GradeMode::Strict);
        assert!(g.correct);
        assert!(t.grade(&ids(&["GPL-2.0-only"]), "GPL-2.0-or-later", GradeMode::Family).correct);
        assert!(!t.grade(&ids(&["GPL-2.0-only"]), "GPL-2.0-or-later", GradeMode::Strict).correct);
        for mode in [GradeMode::Strict, GradeMode::Family] {
            assert!(!t.grade(&[], "MPL-2.0", mode).correct);
            assert!(!t.grade(&ids(&["MIT", "Apache-2.0"]), "MIT", mode).correct);
        }
        assert!(!t.grade(&ids(&["GPL-3.0-only"]), "GPL-2.0-only", GradeMode::Family).correct);
        assert!(!t.grade(&ids(&["LGPL-2.1-only"]), "GPL-2.0-only", GradeMode::Family).correct);
        // both spellings of the same family collapse to one claim
        assert!(t.grade(&ids(&["GPL-2.0-only", "GPL-2.0+"]), "GPL-2.0-only", GradeMode::Family).correct);
        assert!(!t.grade(&ids(&["GPL-2.0-only", "GPL-2.0+"]), "GPL-2.0-only", GradeMode::Strict).correct);
    }

    #[test]
    fn custom_table_is_validated() {
        let bad = "version = 1\n[[license]]\nspdx = \"X\"\ncategory = \"Permissive\"\nfamily = \"X\"\nsubsumes = [\"Y\"]\n";
        assert!(matches!(LicenseTable::from_toml(bad), Err(LicenseError::Table(_))));
        let bad_re = "version = 1\n[[license]]\nspdx = \"X\"\ncategory = \"Permissive\"\nfamily = \"X\"\n[[license.rule]]\nname = \"r\"\ntier = \"phrase\"\npattern = \"(\"\n";
        assert!(LicenseTable::from_toml(bad_re).is_err());
        let good = "version = 1\n[[license]]\nspdx = \"Zlib\"\ncategory = \"Permissive\"\nfamily = \"Zlib\"\n[[license.rule]]\nname = \"zlib\"\ntier = \"keyword\"\npattern = 'zlib license'\n";
        let t = LicenseTable::from_toml(good).unwrap();
        assert_eq!(t.detect_header("# The zlib License\n").spdx_ids, ids(&["Zlib"]));
    }

    #[test]
    fn grade_mode_parses() {
        assert_eq!("STRICT".parse::<GradeMode>().unwrap(), GradeMode::Strict);
        assert!("loose".parse::<GradeMode>().is_err());
    }
}
