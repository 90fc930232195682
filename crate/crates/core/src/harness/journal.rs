//! Append-only JSON-Lines journal of evaluation records.
//!
//! Line 1 is an artifact header; each following line is one record. A
//! resumed run keeps every complete record and drops a torn final line.
//! Finalizing rewrites the file sorted by snippet id.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EvalRecord, HarnessError};
use crate::artifact::ArtifactHeader;

pub const JOURNAL_KIND: &str = "journal";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct JournalContents {
    pub header: ArtifactHeader,
    pub records: Vec<EvalRecord>,
    /// True when an unterminated, unparsable last line was dropped.
    pub torn_tail: bool,
}

/// Parses a journal. With `tolerate_torn_tail`, an unterminated last line
/// that fails to parse is dropped instead of reported.
pub fn parse_journal(path: &Path, text: &str, tolerate_torn_tail: bool) -> Result<JournalContents, HarnessError> {
    let name = path.display().to_string();
    let schema = |line: usize, message: String| HarnessError::Schema {
        path: name.clone(),
        line,
        message,
    };
    let mut lines = text.split_inclusive('\n').enumerate();
    let header = match lines.next() {
        Some((_, l)) => ArtifactHeader::parse(l.trim_end())
            .filter(|h| h.kind == JOURNAL_KIND)
            .ok_or_else(|| schema(1, "missing journal header line".into()))?,
        None => return Err(schema(1, "empty journal".into())),
    };
    let mut records = Vec::new();
    let mut torn_tail = false;
    for (i, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvalRecord>(raw.trim_end()) {
            Ok(r) => records.push(r),
            Err(_) if tolerate_torn_tail && !raw.ends_with('\n') => torn_tail = true,
            Err(e) => return Err(schema(i + 1, e.to_string())),
        }
    }
    Ok(JournalContents {
        header,
        records,
        torn_tail,
    })
}

pub fn read_journal(path: &Path) -> Result<JournalContents, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_journal(path, &text, false)
}

/// Writes header plus records sorted by snippet id, atomically.
pub fn write_sorted(path: &Path, header: &ArtifactHeader, records: &mut [EvalRecord]) -> Result<(), HarnessError> {
    records.sort_by(|a, b| a.snippet_id.cmp(&b.snippet_id));
    let tmp = tmp_path(path);
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        header.write_line(&mut w).map_err(io_err(&tmp))?;
        for r in records.iter() {
            writeln!(w, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
        w.get_ref().sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Single writer; records are flushed line by line.
pub struct JournalWriter {
    path: PathBuf,
    header: ArtifactHeader,
    file: BufWriter<File>,
}

impl JournalWriter {
    /// Opens `path` for a run with `header`. Returns the records already
    /// present when resuming.
    pub fn open(path: &Path, header: ArtifactHeader, resume: bool) -> Result<(Self, Vec<EvalRecord>), HarnessError> {
        let mut existing = Vec::new();
        if path.exists() {
            if !resume {
                return Err(HarnessError::JournalExists(path.display().to_string()));
            }
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let contents = parse_journal(path, &text, true)?;
            if contents.header.config_hash != header.config_hash {
                return Err(HarnessError::ConfigMismatch {
                    path: path.display().to_string(),
                    journal: contents.header.config_hash,
                    current: header.config_hash,
                });
            }
            existing = contents.records;
            write_sorted(path, &header, &mut existing)?;
        } else {
            let mut f = File::create(path).map_err(io_err(path))?;
            header.write_line(&mut f).map_err(io_err(path))?;
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        Ok((
            Self {
                path: path.to_path_buf(),
                header,
                file: BufWriter::new(file),
            },
            existing,
        ))
    }

    pub fn append(&mut self, record: &EvalRecord) -> Result<(), HarnessError> {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(self.file, "{line}").map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))
    }

    /// Rewrites the journal sorted by snippet id and returns its records.
    pub fn finalize(mut self) -> Result<Vec<EvalRecord>, HarnessError> {
        self.file.flush().map_err(io_err(&self.path))?;
        drop(self.file);
        let text = fs::read_to_string(&self.path).map_err(io_err(&self.path))?;
        let mut records = parse_journal(&self.path, &text, false)?.records;
        write_sorted(&self.path, &self.header, &mut records)?;
        Ok(records)
    }
}
