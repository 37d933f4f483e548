//! Forgot-ID requests. The service only records them; the team resolves each
//! one in person and marks it handled from the admin tool.
//!
//! The log is append-only, one tab-separated event per line:
//! `request <id> <received_at> <hint>` or `handled <id> <at>`. Hints are
//! stored with backslash, tab, newline and carriage return escaped.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use bib_core::Timestamp;

use crate::error::RecoveryError;

pub const MAX_HINT_CHARS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryStatus {
    Pending,
    Handled,
}

impl RecoveryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecoveryStatus::Pending => "pending",
            RecoveryStatus::Handled => "handled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryRequest {
    pub request_id: u64,
    pub mother_hint: String,
    pub received_at: Timestamp,
    pub status: RecoveryStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Listing {
    All,
    Pending,
}

pub struct RecoveryQueue {
    log: Option<PathBuf>,
    requests: Mutex<Vec<RecoveryRequest>>,
}

impl RecoveryQueue {
    pub fn in_memory() -> Self {
        RecoveryQueue { log: None, requests: Mutex::new(Vec::new()) }
    }

    /// Opens (or starts) the log at `path`, replaying existing events.
    pub fn open(path: &Path) -> Result<Self, RecoveryError> {
        let requests = match std::fs::read_to_string(path) {
            Ok(text) => replay(&text, path)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(source) => return Err(RecoveryError::Io { path: path.to_path_buf(), source }),
        };
        Ok(RecoveryQueue { log: Some(path.to_path_buf()), requests: Mutex::new(requests) })
    }

    pub fn submit(&self, hint: &str) -> Result<u64, RecoveryError> {
        self.submit_at(hint, Timestamp::now())
    }

    pub fn submit_at(&self, hint: &str, received_at: Timestamp) -> Result<u64, RecoveryError> {
        if hint.trim().is_empty() {
            return Err(RecoveryError::EmptyHint);
        }
        let chars = hint.chars().count();
        if chars > MAX_HINT_CHARS {
            return Err(RecoveryError::HintTooLong(chars));
        }
        let mut requests = self.requests.lock().unwrap_or_else(|e| e.into_inner());
        let request_id = requests.last().map_or(1, |r| r.request_id + 1);
        self.append(&format!("request\t{request_id}\t{received_at}\t{}", escape(hint)))?;
        requests.push(RecoveryRequest {
            request_id,
            mother_hint: hint.to_string(),
            received_at,
            status: RecoveryStatus::Pending,
        });
        Ok(request_id)
    }

    pub fn mark_handled(&self, request_id: u64) -> Result<(), RecoveryError> {
        let mut requests = self.requests.lock().unwrap_or_else(|e| e.into_inner());
        let request = requests
            .iter_mut()
            .find(|r| r.request_id == request_id)
            .ok_or(RecoveryError::UnknownRequest(request_id))?;
        if request.status == RecoveryStatus::Handled {
            return Err(RecoveryError::AlreadyHandled(request_id));
        }
        self.append(&format!("handled\t{request_id}\t{}", Timestamp::now()))?;
        request.status = RecoveryStatus::Handled;
        Ok(())
    }

    pub fn list(&self, listing: Listing) -> Vec<RecoveryRequest> {
        let requests = self.requests.lock().unwrap_or_else(|e| e.into_inner());
        requests
            .iter()
            .filter(|r| listing == Listing::All || r.status == RecoveryStatus::Pending)
            .cloned()
            .collect()
    }

    fn append(&self, line: &str) -> Result<(), RecoveryError> {
        let Some(path) = &self.log else { return Ok(()) };
        let io = |source| RecoveryError::Io { path: path.clone(), source };
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        file.write_all(format!("{line}\n").as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)
    }
}

fn replay(text: &str, path: &Path) -> Result<Vec<RecoveryRequest>, RecoveryError> {
    let mut requests: Vec<RecoveryRequest> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let corrupt = |reason: &str| RecoveryError::CorruptLog {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = line.splitn(4, '\t').collect();
        let id: u64 = parts.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| corrupt("bad request id"))?;
        let at: Timestamp =
            parts.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| corrupt("bad timestamp"))?;
        match (parts[0], parts.get(3)) {
            ("request", Some(hint)) => {
                if requests.last().is_some_and(|r| r.request_id >= id) {
                    return Err(corrupt("request ids must increase"));
                }
                requests.push(RecoveryRequest {
                    request_id: id,
                    mother_hint: unescape(hint),
                    received_at: at,
                    status: RecoveryStatus::Pending,
                });
            }
            ("handled", None) => {
                let r = requests
                    .iter_mut()
                    .find(|r| r.request_id == id)
                    .ok_or_else(|| corrupt("handled event for unknown request"))?;
                r.status = RecoveryStatus::Handled;
            }
            _ => return Err(corrupt("unknown event")),
        }
    }
    Ok(requests)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_sequential_from_one() {
        let q = RecoveryQueue::in_memory();
        assert_eq!(q.submit("lost phone, green case").unwrap(), 1);
        assert_eq!(q.submit("second").unwrap(), 2);
        assert_eq!(q.list(Listing::Pending).len(), 2);
    }

    #[test]
    fn hint_limits() {
        let q = RecoveryQueue::in_memory();
        assert!(matches!(q.submit(""), Err(RecoveryError::EmptyHint)));
        assert!(matches!(q.submit("   "), Err(RecoveryError::EmptyHint)));
        assert!(q.submit(&"é".repeat(500)).is_ok());
        assert!(matches!(q.submit(&"x".repeat(501)), Err(RecoveryError::HintTooLong(501))));
    }

    #[test]
    fn handled_only_once() {
        let q = RecoveryQueue::in_memory();
        q.submit("a").unwrap();
        q.submit("b").unwrap();
        q.mark_handled(1).unwrap();
        let pending: Vec<u64> = q.list(Listing::Pending).iter().map(|r| r.request_id).collect();
        assert_eq!(pending, [2]);
        assert!(matches!(q.mark_handled(1), Err(RecoveryError::AlreadyHandled(1))));
        assert!(matches!(q.mark_handled(9), Err(RecoveryError::UnknownRequest(9))));
        assert_eq!(q.list(Listing::All).len(), 2);
    }

    #[test]
    fn log_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("recovery.log");
        {
            let q = RecoveryQueue::open(&path).unwrap();
            q.submit("tab\there\nnewline \\ slash").unwrap();
            q.submit("second").unwrap();
            q.mark_handled(2).unwrap();
        }
        let q = RecoveryQueue::open(&path).unwrap();
        let all = q.list(Listing::All);
        assert_eq!(all[0].mother_hint, "tab\there\nnewline \\ slash");
        assert_eq!(all[0].status, RecoveryStatus::Pending);
        assert_eq!(all[1].status, RecoveryStatus::Handled);
        assert_eq!(q.submit("third").unwrap(), 3);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
    }

    #[test]
    fn corrupt_log_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("recovery.log");
        std::fs::write(&path, "request\t2\t2015-08-01T00:00:00Z\tx\nrequest\t1\t2015-08-01T00:00:00Z\ty\n").unwrap();
        assert!(matches!(RecoveryQueue::open(&path), Err(RecoveryError::CorruptLog { line: 2, .. })));
        std::fs::write(&path, "handled\t4\t2015-08-01T00:00:00Z\n").unwrap();
        assert!(matches!(RecoveryQueue::open(&path), Err(RecoveryError::CorruptLog { line: 1, .. })));
    }
}
