use std::io::Write;

use serde::Serialize;

use crate::error::CliError;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// Infeasible, violated or failed verification.
    Negative,
}

impl Verdict {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Ok
        } else {
            Verdict::Negative
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Verdict::Ok => 0,
            Verdict::Negative => 1,
        }
    }
}

/// A closed stdout (for example `| head`) is not an error.
fn quiet_pipe(r: std::io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    quiet_pipe(writeln!(out, "{text}"))
}

pub fn csv_rows<T: Serialize>(rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    for r in rows {
        match w.serialize(r) {
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) => {
                return Ok(())
            }
            other => other?,
        }
    }
    quiet_pipe(w.flush())
}
