//! Per-model aggregation and report files.
//!
//! Column order of every file is fixed here and listed in
//! `docs/report-schema.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{lico, LiCoScore, LicoWeights, ScoreError};
use crate::harness::EvalRecord;
use crate::license::{GradeMode, LicenseCategory};

pub const REPORT_COLUMNS: [&str; 10] = [
    "model",
    "#striking_sim",
    "#striking_sim_pct",
    "Acc",
    "#permissive",
    "Acc_p",
    "#copyleft",
    "Acc_c",
    "LiCo",
    "errors",
];

pub const DISTRIBUTION_COLUMNS: [&str; 12] = [
    "model",
    "snippet_id",
    "category",
    "max_sim",
    "bleu4",
    "jaccard",
    "edit_sim",
    "body_lines",
    "cc",
    "identical_comments",
    "is_striking",
    "correct",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub score: LiCoScore,
    pub correct_permissive: usize,
    pub correct_copyleft: usize,
    /// Records carrying a transport error note.
    pub errors: usize,
}

/// Scores one model's records against a benchmark of `total_items`.
///
/// A record whose completion failed has no verdict and is only counted in
/// `errors`. A striking record whose inquiry failed counts toward the
/// striking total but not toward either accuracy denominator.
pub fn aggregate(model: &str, records: &[EvalRecord], total_items: usize, weights: LicoWeights) -> Result<ModelRow, ScoreError> {
    let mut n_striking = 0;
    let (mut n_p, mut c_p, mut n_c, mut c_c) = (0, 0, 0, 0);
    let mut errors = 0;
    for r in records {
        if r.error.is_some() {
            errors += 1;
        }
        if !r.is_striking() {
            continue;
        }
        n_striking += 1;
        let Some(grade) = &r.grade else { continue };
        let correct = usize::from(grade.correct);
        match r.category {
            LicenseCategory::Permissive => {
                n_p += 1;
                c_p += correct;
            }
            LicenseCategory::WeakCopyleft | LicenseCategory::StrongCopyleft => {
                n_c += 1;
                c_c += correct;
            }
        }
    }
    let ratio = |c: usize, n: usize| (n > 0).then(|| c as f64 / n as f64);
    let mut score = lico(n_striking, total_items, ratio(c_p, n_p), ratio(c_c, n_c), weights)?;
    score.n_permissive = Some(n_p);
    score.n_copyleft = Some(n_c);
    score.acc_overall = ratio(c_p + c_c, n_p + n_c);
    Ok(ModelRow {
        model: model.to_string(),
        score,
        correct_permissive: c_p,
        correct_copyleft: c_c,
        errors,
    })
}

/// Makes `mode` the grade of record, using each record's alternate grade
/// where the run graded under the other mode.
pub fn apply_grading(records: &mut [EvalRecord], mode: GradeMode) {
    for r in records {
        if r.grade.as_ref().is_some_and(|g| g.mode != mode) && r.alternate_grade.as_ref().is_some_and(|g| g.mode == mode) {
            std::mem::swap(&mut r.grade, &mut r.alternate_grade);
        }
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn pct(row: &ModelRow) -> String {
    format!("{:.2}", 100.0 * row.score.n)
}

fn cells(row: &ModelRow) -> [String; 10] {
    let s = &row.score;
    [
        row.model.clone(),
        s.n_striking.to_string(),
        pct(row),
        opt(s.acc_overall, 2),
        s.n_permissive.unwrap_or(0).to_string(),
        opt(s.acc_p, 2),
        s.n_copyleft.unwrap_or(0).to_string(),
        opt(s.acc_c, 2),
        format!("{:.3}", s.lico),
        row.errors.to_string(),
    ]
}

/// CSV text. The first line is a `#` comment carrying `note`.
pub fn report_csv(rows: &[ModelRow], note: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    for row in rows {
        w.write_record(cells(row)).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!("# {note}\n{body}")
}

pub fn report_markdown(rows: &[ModelRow], note: &str) -> String {
    let mut out = format!("<!-- {note} -->\n\n");
    out.push_str("| Model | #striking_sim | Acc | #permissive | Acc_p | #copyleft | Acc_c | LiCo | errors |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for row in rows {
        let c = cells(row);
        let model = c[0].replace('|', "\\|");
        let _ = writeln!(
            out,
            "| {model} | {} ({}%) | {} | {} | {} | {} | {} | {} | {} |",
            c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9]
        );
    }
    out
}

/// One line per scored record, for plotting similarity and size
/// distributions.
pub fn distributions_csv(records: &[EvalRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DISTRIBUTION_COLUMNS).expect("in-memory write");
    for r in records {
        let (Some(s), Some(v)) = (&r.scores, &r.verdict) else { continue };
        w.write_record([
            r.model.clone(),
            r.snippet_id.clone(),
            r.category.as_str().to_string(),
            format!("{:.6}", s.max_sim),
            format!("{:.6}", s.bleu4),
            format!("{:.6}", s.jaccard),
            format!("{:.6}", s.edit_sim),
            v.reference_metrics.body_lines.to_string(),
            v.reference_metrics.cyclomatic_complexity.to_string(),
            s.identical_comments.to_string(),
            v.is_striking.to_string(),
            r.grade.as_ref().map_or_else(String::new, |g| g.correct.to_string()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub markdown: PathBuf,
    pub distributions: PathBuf,
}

/// Writes report.csv, report.md and distributions.csv into `dir`.
pub fn emit_report(dir: &Path, rows: &[ModelRow], records: &[EvalRecord], note: &str) -> std::io::Result<ReportPaths> {
    fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        csv: dir.join("report.csv"),
        markdown: dir.join("report.md"),
        distributions: dir.join("distributions.csv"),
    };
    fs::write(&paths.csv, report_csv(rows, note))?;
    fs::write(&paths.markdown, report_markdown(rows, note))?;
    fs::write(&paths.distributions, distributions_csv(records))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n_striking: usize, p: (usize, usize), c: (usize, usize)) -> ModelRow {
        let ratio = |c: usize, n: usize| (n > 0).then(|| c as f64 / n as f64);
        let mut score = lico(n_striking, 4187, ratio(p.1, p.0), ratio(c.1, c.0), LicoWeights::default()).unwrap();
        score.n_permissive = Some(p.0);
        score.n_copyleft = Some(c.0);
        score.acc_overall = ratio(p.1 + c.1, p.0 + c.0);
        ModelRow {
            model: "m".into(),
            score,
            correct_permissive: p.1,
            correct_copyleft: c.1,
            errors: 0,
        }
    }

    #[test]
    fn absent_accuracy_is_dash() {
        let md = report_markdown(&[row(20, (20, 19), (0, 0))], "n");
        assert!(md.contains("| m | 20 (0.48%) | 0.95 | 20 | 0.95 | 0 | - | 0.985 | 0 |"), "{md}");
    }

    #[test]
    fn csv_round_trips() {
        let text = report_csv(&[row(47, (41, 35), (6, 0))], "protocol abc");
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(headers, REPORT_COLUMNS);
        let recs: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 1);
        assert_eq!(&recs[0][3], "0.74");
        assert_eq!(&recs[0][8], "0.385");
    }

    #[test]
    fn empty_record_list_scores_one() {
        let r = aggregate("m", &[], 4187, LicoWeights::default()).unwrap();
        assert_eq!(r.score.lico, 1.0);
        assert_eq!((r.score.n_striking, r.errors), (0, 0));
        assert_eq!(r.score.acc_overall, None);
    }
}
