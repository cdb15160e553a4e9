//! Per-run dataset and trace files. Each append rewrites the whole file
//! through a temporary and a rename, so a file on disk is always complete.

use std::io::Write;
use std::path::{Path, PathBuf};

use smoothopt_core::optimizer::StepOutcome;
use smoothopt_core::EvaluationRecord;

use crate::format::{parse_records, parse_trace, record_line, trace_line};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const TRACE_FILE: &str = "trace.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: crate::format::ParseError },
    #[error("{path}: {reason}")]
    Inconsistent { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Replaces `path` with `contents` via a sibling temporary file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// What a run directory holds when `--resume` is given.
#[derive(Debug, Clone, PartialEq)]
pub enum Resume {
    Fresh,
    /// Latin hypercube records only.
    Doe(Vec<EvaluationRecord>),
    /// Dataset up to and including the last traced iteration.
    Trace { records: Vec<EvaluationRecord>, trace: Vec<StepOutcome> },
}

pub struct RunFiles {
    dir: PathBuf,
    dataset: String,
    trace: String,
}

impl RunFiles {
    /// Starts an empty run directory, discarding earlier files.
    pub fn create(dir: &Path) -> Result<Self, StoreError> {
        let files = Self { dir: dir.to_path_buf(), dataset: String::new(), trace: String::new() };
        files.flush_dataset()?;
        files.flush_trace()?;
        Ok(files)
    }

    /// Reads what an interrupted run left behind. Records written after
    /// the last traced iteration are dropped; an incomplete Latin hypercube
    /// (fewer than `n0` records) means a fresh start.
    pub fn resume(dir: &Path, n0: usize) -> Result<(Self, Resume), StoreError> {
        let dataset_path = dir.join(DATASET_FILE);
        let trace_path = dir.join(TRACE_FILE);
        let read = |p: &Path| -> Result<String, StoreError> {
            match std::fs::read_to_string(p) {
                Ok(s) => Ok(s),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(e) => Err(StoreError::Io { path: p.to_path_buf(), source: e }),
            }
        };
        let records = parse_records(&read(&dataset_path)?).map_err(|source| StoreError::Parse { path: dataset_path.clone(), source })?;
        let mut trace = parse_trace(&read(&trace_path)?).map_err(|source| StoreError::Parse { path: trace_path.clone(), source })?;

        for (i, t) in trace.iter().enumerate() {
            if t.k != i + 1 {
                return Err(StoreError::Inconsistent { path: trace_path, reason: format!("line {} has k = {}", i + 1, t.k) });
            }
        }
        let last_k = trace.last().map_or(0, |t| t.k);
        let kept: Vec<EvaluationRecord> = records.into_iter().filter(|r| r.iteration <= last_k).collect();
        let doe = kept.iter().filter(|r| r.iteration == 0).count();
        if doe < n0 {
            return Ok((Self::create(dir)?, Resume::Fresh));
        }
        if doe > n0 {
            return Err(StoreError::Inconsistent { path: dataset_path, reason: format!("{doe} start records, expected {n0}") });
        }
        for t in &mut trace {
            t.new_records = kept.iter().filter(|r| r.iteration == t.k).cloned().collect();
        }
        if let Some(t) = trace.last() {
            if t.dataset_size != kept.len() {
                return Err(StoreError::Inconsistent {
                    path: dataset_path,
                    reason: format!("{} records after iteration {}, trace says {}", kept.len(), t.k, t.dataset_size),
                });
            }
        }

        let mut files = Self { dir: dir.to_path_buf(), dataset: String::new(), trace: String::new() };
        for r in &kept {
            files.dataset.push_str(&record_line(r));
            files.dataset.push('\n');
        }
        // keep the exact bytes of the surviving trace lines
        for line in read(&trace_path)?.lines().filter(|l| !l.trim().is_empty()) {
            files.trace.push_str(line);
            files.trace.push('\n');
        }
        files.flush_dataset()?;
        files.flush_trace()?;
        let state = if trace.is_empty() { Resume::Doe(kept) } else { Resume::Trace { records: kept, trace } };
        Ok((files, state))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append_records(&mut self, records: &[EvaluationRecord]) -> Result<(), StoreError> {
        for r in records {
            self.dataset.push_str(&record_line(r));
            self.dataset.push('\n');
        }
        self.flush_dataset()
    }

    pub fn append_trace(&mut self, outcome: &StepOutcome, x_next_physical: &[f64]) -> Result<(), StoreError> {
        self.trace.push_str(&trace_line(outcome, x_next_physical));
        self.trace.push('\n');
        self.flush_trace()
    }

    fn flush_dataset(&self) -> Result<(), StoreError> {
        write_atomic(&self.dir.join(DATASET_FILE), self.dataset.as_bytes())
    }

    fn flush_trace(&self) -> Result<(), StoreError> {
        write_atomic(&self.dir.join(TRACE_FILE), self.trace.as_bytes())
    }
}
