//! Line-oriented verification reports: `<check-id> <params> <status> <max-deviation>`.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub id: String,
    pub params: String,
    pub status: Status,
    /// Deviation from the expected value, or for bounds the amount by which
    /// the bound is exceeded (negative when it holds with slack).
    pub deviation: f64,
    pub note: Option<String>,
}

impl CheckLine {
    /// `deviation ≤ tol` passes.
    pub fn within(id: &str, params: String, deviation: f64, tol: f64) -> Self {
        let status = if deviation <= tol { Status::Pass } else { Status::Fail };
        Self {
            id: id.to_string(),
            params,
            status,
            deviation,
            note: None,
        }
    }

    /// Passes when `value ≤ bound + tol`; the reported deviation is `value − bound`.
    pub fn bound(id: &str, params: String, value: f64, bound: f64, tol: f64) -> Self {
        let mut line = Self::within(id, params, value - bound, tol);
        if value.is_nan() {
            line.status = Status::Fail;
        }
        line
    }

    pub fn skip(id: &str, params: String, note: &str) -> Self {
        Self {
            id: id.to_string(),
            params,
            status: Status::Skip,
            deviation: 0.0,
            note: Some(note.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = if self.params.is_empty() { "-" } else { &self.params };
        write!(f, "{} {} {} {:.3e}", self.id, params, self.status, self.deviation)?;
        if let Some(note) = &self.note {
            write!(f, " # {note}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<CheckLine>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, line: CheckLine) {
        self.lines.push(line);
    }

    pub fn extend(&mut self, other: Report) {
        self.lines.extend(other.lines);
    }

    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| !l.passed())
    }

    pub fn count(&self, status: Status) -> usize {
        self.lines.iter().filter(|l| l.status == status).count()
    }

    /// Largest deviation among non-skipped lines.
    pub fn max_deviation(&self) -> f64 {
        self.lines
            .iter()
            .filter(|l| l.status != Status::Skip)
            .map(|l| l.deviation)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
