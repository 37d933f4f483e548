//! The on-device store and its file.
//!
//! The file starts with optional `#TOKEN <token>` and `#SOURCE <hex>` lines,
//! followed by the synced slice in cohort-file format when the store holds
//! data. `#SOURCE` is a fingerprint of the token the data was fetched with.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bib_core::cohort::{parse_cohort_file, write_cohort_file};
use bib_core::{CohortError, DatasetSnapshot};
use sha2::{Digest, Sha256};

use crate::error::StoreFileError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreState {
    pub remembered_token: Option<String>,
    /// Fingerprint of the token `data` was fetched with.
    pub source: Option<String>,
    /// One mother's slice of one server snapshot.
    pub data: Option<DatasetSnapshot>,
}

pub(crate) fn token_source(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

pub(crate) fn check_token(token: &str) -> Result<(), StoreFileError> {
    if token.is_empty() || token.chars().any(|c| c.is_whitespace() || c.is_control()) {
        Err(StoreFileError::InvalidToken)
    } else {
        Ok(())
    }
}

impl StoreState {
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.remembered_token {
            out.push_str(&format!("#TOKEN {t}\n"));
        }
        if let (Some(src), Some(_)) = (&self.source, &self.data) {
            out.push_str(&format!("#SOURCE {src}\n"));
        }
        if let Some(data) = &self.data {
            out.push_str(&write_cohort_file(data));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, StoreFileError> {
        let corrupt = |line: usize, reason: &str| StoreFileError::Corrupt {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut state = StoreState::default();
        let mut body_start = 0;
        let mut skipped = 0;
        for (idx, line) in text.lines().enumerate() {
            if let Some(t) = line.strip_prefix("#TOKEN ") {
                check_token(t).map_err(|_| corrupt(idx + 1, "bad token line"))?;
                state.remembered_token = Some(t.to_string());
            } else if let Some(s) = line.strip_prefix("#SOURCE ") {
                state.source = Some(s.to_string());
            } else {
                break;
            }
            body_start += line.len() + 1;
            skipped = idx + 1;
        }
        let body = text.get(body_start.min(text.len())..).unwrap_or("");
        if body.trim().is_empty() {
            state.source = None;
            return Ok(state);
        }
        let data = parse_cohort_file(body).map_err(|e| match e {
            CohortError::Syntax { line, reason } => StoreFileError::Cohort {
                path: path.to_path_buf(),
                source: CohortError::Syntax { line: line + skipped, reason },
            },
        })?;
        if data.mothers.len() != 1 || data.children.iter().any(|c| c.mother_id != data.mothers[0].mother_id) {
            return Err(corrupt(skipped + 1, "store must hold exactly one mother's records"));
        }
        state.data = Some(data);
        Ok(state)
    }

    pub fn load(path: &Path) -> Result<Self, StoreFileError> {
        match fs::read_to_string(path) {
            Ok(text) => Self::parse(&text, path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(StoreState::default()),
            Err(source) => Err(StoreFileError::Io { path: path.to_path_buf(), source }),
        }
    }

    /// Atomic replace, owner-only permissions on unix.
    pub fn save(&self, path: &Path) -> Result<(), StoreFileError> {
        let io = |source| StoreFileError::Io { path: path.to_path_buf(), source };
        let tmp: PathBuf = path.with_extension("tmp");
        let mut options = fs::OpenOptions::new();
        options.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            options.mode(0o600);
        }
        let mut file = options.open(&tmp).map_err(io)?;
        file.write_all(self.to_file_string().as_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        drop(file);
        fs::rename(&tmp, path).map_err(io)
    }
}
