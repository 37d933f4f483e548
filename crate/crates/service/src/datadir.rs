//! On-disk layout of a service data directory:
//!
//! - `snapshot.cohort`: the installed snapshot, in cohort-file format
//! - `tokens.tsv`: the token table
//! - `recovery.log`: the forgot-ID request log
//!
//! The token and recovery paths may be overridden.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bib_core::cohort::{parse_cohort_file, write_cohort_file};
use bib_core::{DatasetSnapshot, Timestamp};

use crate::active::ActiveSnapshot;
use crate::error::StoreError;
use crate::recovery::RecoveryQueue;
use crate::service::Service;
use crate::tokens::TokenTable;

pub const SNAPSHOT_FILE: &str = "snapshot.cohort";
pub const TOKENS_FILE: &str = "tokens.tsv";
pub const RECOVERY_FILE: &str = "recovery.log";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataDir {
    root: PathBuf,
    tokens: PathBuf,
    recovery: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        DataDir { tokens: root.join(TOKENS_FILE), recovery: root.join(RECOVERY_FILE), root }
    }

    pub fn with_tokens_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.tokens = path.into();
        self
    }

    pub fn with_recovery_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.recovery = path.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.root.join(SNAPSHOT_FILE)
    }

    pub fn tokens_path(&self) -> &Path {
        &self.tokens
    }

    pub fn recovery_path(&self) -> &Path {
        &self.recovery
    }

    pub fn load_snapshot(&self) -> Result<Option<DatasetSnapshot>, StoreError> {
        let path = self.snapshot_path();
        match fs::read_to_string(&path) {
            Ok(text) => parse_cohort_file(&text)
                .map(Some)
                .map_err(|source| StoreError::Cohort { path, source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    pub fn require_snapshot(&self) -> Result<DatasetSnapshot, StoreError> {
        self.load_snapshot()?.ok_or_else(|| StoreError::NoSnapshot(self.root.clone()))
    }

    /// Validates `new`, checks it is newer than the installed snapshot (if
    /// any) and writes it atomically. Returns the replaced update date.
    pub fn install_snapshot(&self, new: &DatasetSnapshot) -> Result<Option<Timestamp>, StoreError> {
        let previous = match self.load_snapshot()? {
            Some(current) => {
                let active = ActiveSnapshot::new(current)?;
                Some(active.swap_snapshot(new.clone())?)
            }
            None => {
                ActiveSnapshot::new(new.clone())?;
                None
            }
        };
        fs::create_dir_all(&self.root)
            .map_err(|source| StoreError::Io { path: self.root.clone(), source })?;
        write_atomic(&self.snapshot_path(), write_cohort_file(new).as_bytes(), false)?;
        Ok(previous)
    }

    pub fn load_tokens(&self) -> Result<Option<TokenTable>, StoreError> {
        if self.tokens.exists() {
            TokenTable::load(&self.tokens).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn require_tokens(&self) -> Result<TokenTable, StoreError> {
        self.load_tokens()?.ok_or_else(|| StoreError::NoTokens(self.tokens.clone()))
    }

    pub fn save_tokens(&self, table: &TokenTable) -> Result<(), StoreError> {
        table.save(&self.tokens)
    }

    pub fn open_recovery(&self) -> Result<RecoveryQueue, StoreError> {
        Ok(RecoveryQueue::open(&self.recovery)?)
    }

    /// Everything `serve` needs: installed snapshot, token table, recovery log.
    pub fn open_service(&self) -> Result<Service, StoreError> {
        let active = ActiveSnapshot::new(self.require_snapshot()?)?;
        Ok(Service::new(active, self.require_tokens()?, self.open_recovery()?))
    }
}


/// Writes via a sibling temp file and rename, so readers see the old or the
/// new content, never a mix.
pub fn write_atomic(path: &Path, bytes: &[u8], private: bool) -> Result<(), StoreError> {
    let io = |source| StoreError::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    let mut options = fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    if private {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    #[cfg(not(unix))]
    let _ = private;
    let mut file = options.open(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}
