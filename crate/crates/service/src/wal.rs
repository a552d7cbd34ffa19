//! Append-only JSON-lines log: one line per atomic change.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::store::{AuditEntry, PatientRecord, UpdateSession};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub(crate) enum WalEvent {
    Create { record: PatientRecord },
    Commit { patient_id: String, revision: u64, entries: Vec<AuditEntry>, session: UpdateSession },
    Session { session: UpdateSession },
}

pub(crate) struct Wal {
    file: File,
}

impl Wal {
    /// Opens the log and returns the events already in it. An unreadable
    /// final line without a newline is a torn write and is cut off.
    pub(crate) fn open(path: &Path) -> Result<(Self, Vec<WalEvent>), ServiceError> {
        let mut events = Vec::new();
        let mut valid_len = 0u64;
        if path.exists() {
            let mut reader = BufReader::new(File::open(path)?);
            let mut line = String::new();
            let mut number = 0;
            loop {
                line.clear();
                if reader.read_line(&mut line)? == 0 {
                    break;
                }
                number += 1;
                let complete = line.ends_with('\n');
                if line.trim().is_empty() {
                    valid_len += line.len() as u64;
                    continue;
                }
                match (serde_json::from_str::<WalEvent>(line.trim_end()), complete) {
                    (Ok(event), true) => {
                        events.push(event);
                        valid_len += line.len() as u64;
                    }
                    (_, false) => break,
                    (Err(e), true) => {
                        return Err(ServiceError::Storage(format!("{} line {number}: {e}", path.display())));
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if file.metadata()?.len() > valid_len {
            file.set_len(valid_len)?;
        }
        Ok((Self { file }, events))
    }

    pub(crate) fn append(&mut self, event: &WalEvent) -> Result<(), ServiceError> {
        let mut line = serde_json::to_string(event).map_err(|e| ServiceError::Storage(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}
