//! Tab-delimited, sectioned text formats and report emission.
//!
//! Every file is a sequence of `[section]` headers followed by rows whose
//! fields are separated by a single tab. Blank lines and lines starting with
//! `#` are ignored.

mod formats;
mod petri;
mod report;

pub use formats::{
    parse_network, parse_network_file, parse_scenario, parse_scenario_file, parse_timetable,
    parse_timetable_file, serialize_network, serialize_scenario, serialize_timetable, EventSpec,
    ScenarioSpec,
};
pub use petri::{parse_petri, parse_petri_file, serialize_petri};
pub use report::{build_report, emit_report, DelayReport, ReportFormat, ReportRow};

use std::path::Path;

use thiserror::Error;

use crate::network::NetworkError;
use crate::petri::PetriError;
use crate::resched::RescheduleError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("{path}: {msg}")]
    Read { path: String, msg: String },
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("line {line}: unknown station {code}")]
    UnknownStation { line: usize, code: String },
    #[error("line {line}: itinerary of train {train} is not monotone")]
    NonMonotoneItinerary { line: usize, train: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Petri(#[from] PetriError),
    #[error(transparent)]
    Reschedule(#[from] RescheduleError),
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone)]
pub(crate) struct Row<'a> {
    pub line: usize,
    /// `(column, text)`, columns 1-based.
    pub fields: Vec<(usize, &'a str)>,
}

impl<'a> Row<'a> {
    pub fn err(&self, idx: usize, msg: impl Into<String>) -> IoError {
        let col = self
            .fields
            .get(idx)
            .map_or_else(|| self.fields.last().map_or(1, |f| f.0 + f.1.len()), |f| f.0);
        IoError::Parse {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }

    pub fn get(&self, idx: usize, what: &str) -> Result<&'a str, IoError> {
        self.fields
            .get(idx)
            .map(|f| f.1)
            .ok_or_else(|| self.err(idx, format!("missing {what}")))
    }

    pub fn num<T: std::str::FromStr>(&self, idx: usize, what: &str) -> Result<T, IoError> {
        self.get(idx, what)?
            .parse()
            .map_err(|_| self.err(idx, format!("invalid {what}")))
    }

    pub fn expect_len(&self, min: usize, max: usize) -> Result<(), IoError> {
        let n = self.fields.len();
        if n < min || n > max {
            return Err(self.err(n.min(max), format!("expected {min}..={max} fields, found {n}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Section<'a> {
    pub name: &'a str,
    pub line: usize,
    pub rows: Vec<Row<'a>>,
}

pub(crate) fn sections(text: &str) -> Result<Vec<Section<'_>>, IoError> {
    let mut out: Vec<Section> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(IoError::Parse {
                line,
                col: trimmed.len(),
                msg: "unterminated section header".into(),
            })?;
            out.push(Section {
                name,
                line,
                rows: Vec::new(),
            });
            continue;
        }
        let Some(sec) = out.last_mut() else {
            return Err(IoError::Parse {
                line,
                col: 1,
                msg: "data before any section header".into(),
            });
        };
        let mut fields = Vec::new();
        let mut col = 1;
        for f in trimmed.split('\t') {
            fields.push((col, f.trim()));
            col += f.chars().count() + 1;
        }
        sec.rows.push(Row { line, fields });
    }
    Ok(out)
}

pub(crate) fn unknown_section(s: &Section) -> IoError {
    IoError::Parse {
        line: s.line,
        col: 2,
        msg: format!("unknown section [{}]", s.name),
    }
}
