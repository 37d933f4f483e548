//! Local store plus the update-date driven refresh.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{RwLock, RwLockReadGuard};

use bib_core::protocol::{self, PARAM_CHILD_ID, PARAM_TOKEN};
use bib_core::wire::{self, FaultCode, Reply, RequestEnvelope, ResponseEnvelope};
use bib_core::{ChildRecord, DatasetSnapshot, Measurement, MotherRecord, ReferenceCurve, Timestamp};

use crate::endpoint::Endpoint;
use crate::error::{StoreFileError, SyncError};
use crate::store::{check_token, token_source, StoreState};

/// Refresh passes attempted when the server's date moves during a refresh.
pub const MAX_REFRESH_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncKind {
    InitialLoad,
    NoChange,
    FullRefresh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncOutcome {
    pub kind: SyncKind,
    pub new_update_date: Timestamp,
}

/// Result of a sync attempt that tolerates being offline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Synced(SyncOutcome),
    /// The endpoint was unreachable; local data as of this date is served.
    Offline { local_date: Timestamp },
}

pub fn needs_refresh(local: Option<Timestamp>, server: Timestamp) -> bool {
    local.is_none_or(|l| server > l)
}

pub struct LocalStore {
    path: Option<PathBuf>,
    state: RwLock<StoreState>,
    busy: AtomicBool,
}

struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl LocalStore {
    pub fn in_memory() -> Self {
        Self::from_state(None, StoreState::default())
    }

    /// Opens the store file at `path`; a missing file is an empty store.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreFileError> {
        let path = path.into();
        let state = StoreState::load(&path)?;
        Ok(Self::from_state(Some(path), state))
    }

    fn from_state(path: Option<PathBuf>, state: StoreState) -> Self {
        LocalStore { path, state: RwLock::new(state), busy: AtomicBool::new(false) }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn read(&self) -> RwLockReadGuard<'_, StoreState> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Persists first, then updates memory, so memory never runs ahead of disk.
    fn commit(&self, state: StoreState) -> Result<(), StoreFileError> {
        if let Some(path) = &self.path {
            state.save(path)?;
        }
        *self.state.write().unwrap_or_else(|e| e.into_inner()) = state;
        Ok(())
    }

    pub fn state(&self) -> StoreState {
        self.read().clone()
    }

    pub fn update_date(&self) -> Option<Timestamp> {
        self.read().data.as_ref().map(|d| d.update_date)
    }

    pub fn data(&self) -> Option<DatasetSnapshot> {
        self.read().data.clone()
    }

    pub fn remembered_token(&self) -> Option<String> {
        self.read().remembered_token.clone()
    }

    pub fn remember_token(&self, token: &str) -> Result<(), StoreFileError> {
        check_token(token)?;
        let mut next = self.state();
        next.remembered_token = Some(token.to_string());
        self.commit(next)
    }

    pub fn forget_token(&self) -> Result<(), StoreFileError> {
        let mut next = self.state();
        next.remembered_token = None;
        self.commit(next)
    }

    pub fn local_children(&self) -> Result<Vec<String>, SyncError> {
        let state = self.read();
        let data = state.data.as_ref().ok_or(SyncError::EmptyStore)?;
        Ok(data.children.iter().map(|c| c.child_id.clone()).collect())
    }

    /// Ascending by age. An unknown child yields an empty list.
    pub fn local_measurements(&self, child_id: &str) -> Result<Vec<Measurement>, SyncError> {
        let state = self.read();
        let data = state.data.as_ref().ok_or(SyncError::EmptyStore)?;
        Ok(data.lookup_measurements(child_id).into_iter().cloned().collect())
    }

    pub fn local_reference(&self) -> Result<ReferenceCurve, SyncError> {
        let state = self.read();
        let data = state.data.as_ref().ok_or(SyncError::EmptyStore)?;
        Ok(data.reference.clone())
    }

    /// Brings the store up to the server's snapshot for the mother owning
    /// `token`. On failure after the old data was dropped, the store is left
    /// empty.
    pub fn sync(&self, token: &str, endpoint: &dyn Endpoint) -> Result<SyncOutcome, SyncError> {
        if self.busy.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(SyncError::Busy);
        }
        let _guard = BusyGuard(&self.busy);

        let before = self.state();
        let local = before.data.as_ref().map(|d| d.update_date);
        let source = token_source(token);
        let mut server = last_update(endpoint, token)?;
        if !needs_refresh(local, server) && before.source.as_deref() == Some(source.as_str()) {
            return Ok(SyncOutcome { kind: SyncKind::NoChange, new_update_date: local.unwrap_or(server) });
        }

        let emptied = StoreState { remembered_token: before.remembered_token.clone(), source: None, data: None };
        self.commit(emptied.clone())?;

        let mut passes = 0;
        let staged = loop {
            passes += 1;
            // A snapshot swapped mid-pass can fault a lookup (a child that
            // vanished); the date check below tells that apart from a real fault.
            let staged = match fetch_slice(endpoint, token, server) {
                Err(SyncError::Protocol(reason)) => Err(reason),
                other => Ok(other?),
            };
            let confirmed = last_update(endpoint, token)?;
            match staged {
                Ok(staged) if confirmed == server => break staged,
                Err(reason) if confirmed == server => return Err(SyncError::Protocol(reason)),
                _ => {}
            }
            if passes == MAX_REFRESH_PASSES {
                return Err(SyncError::Protocol(format!(
                    "server update date kept changing over {passes} refresh passes"
                )));
            }
            server = confirmed;
        };

        self.commit(StoreState { source: Some(source), data: Some(staged), ..emptied })?;
        let kind = if local.is_none() { SyncKind::InitialLoad } else { SyncKind::FullRefresh };
        Ok(SyncOutcome { kind, new_update_date: server })
    }

    /// Like `sync`, but an unreachable endpoint with a populated store
    /// yields the local date instead of an error.
    pub fn sync_or_offline(&self, token: &str, endpoint: &dyn Endpoint) -> Result<Freshness, SyncError> {
        match self.sync(token, endpoint) {
            Ok(outcome) => Ok(Freshness::Synced(outcome)),
            Err(SyncError::Network(e)) => match self.update_date() {
                Some(local_date) => Ok(Freshness::Offline { local_date }),
                None => Err(SyncError::Network(e)),
            },
            Err(e) => Err(e),
        }
    }
}

fn call(endpoint: &dyn Endpoint, req: &RequestEnvelope) -> Result<ResponseEnvelope, SyncError> {
    let body = wire::encode_request(req).map_err(|e| SyncError::Protocol(e.to_string()))?;
    let reply = endpoint.post(&req.action, &body)?;
    match wire::decode_response(&reply).map_err(|e| SyncError::Protocol(e.to_string()))? {
        Reply::Response(r) => Ok(r),
        Reply::Fault(f) if f.code == FaultCode::AuthFailed => Err(SyncError::Auth(f.reason)),
        Reply::Fault(f) => Err(SyncError::Protocol(format!("{}: {}", f.code, f.reason))),
    }
}

fn protocol_err(e: bib_core::WireError) -> SyncError {
    SyncError::Protocol(e.to_string())
}

fn last_update(endpoint: &dyn Endpoint, token: &str) -> Result<Timestamp, SyncError> {
    let r = call(endpoint, &RequestEnvelope::new(protocol::GET_LAST_UPDATE).token(token))?;
    protocol::parse_last_update(&r).map_err(protocol_err)
}

fn fetch_slice(endpoint: &dyn Endpoint, token: &str, stamp: Timestamp) -> Result<DatasetSnapshot, SyncError> {
    let r = call(endpoint, &RequestEnvelope::new(protocol::AUTHENTICATE).param(PARAM_TOKEN, token))?;
    let mother_id = protocol::parse_authenticate(&r).map_err(protocol_err)?;

    let r = call(endpoint, &RequestEnvelope::new(protocol::GET_CHILDREN).token(token))?;
    let child_ids = protocol::parse_children(&r).map_err(protocol_err)?;

    let mut measurements = Vec::new();
    for child_id in &child_ids {
        let req = RequestEnvelope::new(protocol::GET_MEASUREMENTS).token(token).param(PARAM_CHILD_ID, child_id);
        let r = call(endpoint, &req)?;
        let mut ms = protocol::parse_measurements(child_id, &r).map_err(protocol_err)?;
        ms.sort_by_key(|m| m.age_months);
        measurements.extend(ms);
    }

    let r = call(endpoint, &RequestEnvelope::new(protocol::GET_REFERENCE_CURVE).token(token))?;
    let reference = protocol::parse_reference(&r).map_err(protocol_err)?;

    Ok(DatasetSnapshot {
        update_date: stamp,
        mothers: vec![MotherRecord { mother_id: mother_id.clone(), child_ids: child_ids.clone() }],
        children: child_ids
            .into_iter()
            .map(|child_id| ChildRecord { child_id, mother_id: mother_id.clone() })
            .collect(),
        measurements,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    #[test]
    fn refresh_decision() {
        let t1 = t("2015-08-01T00:00:00Z");
        let t2 = t("2015-09-01T00:00:00Z");
        assert!(needs_refresh(None, t1));
        assert!(!needs_refresh(Some(t1), t1));
        assert!(needs_refresh(Some(t1), t2));
        assert!(!needs_refresh(Some(t2), t1));
    }

    #[test]
    fn empty_store_reads_fail() {
        let store = LocalStore::in_memory();
        assert!(matches!(store.local_children(), Err(SyncError::EmptyStore)));
        assert!(matches!(store.local_measurements("C001"), Err(SyncError::EmptyStore)));
        assert!(matches!(store.local_reference(), Err(SyncError::EmptyStore)));
        assert_eq!(store.update_date(), None);
    }

    #[test]
    fn token_memory_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.txt");
        LocalStore::open(&path).unwrap().remember_token("TK-0001").unwrap();
        let store = LocalStore::open(&path).unwrap();
        assert_eq!(store.remembered_token().as_deref(), Some("TK-0001"));
        store.forget_token().unwrap();
        assert_eq!(LocalStore::open(&path).unwrap().remembered_token(), None);
    }

    #[cfg(unix)]
    #[test]
    fn store_file_is_private() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.txt");
        LocalStore::open(&path).unwrap().remember_token("TK-0001").unwrap();
        let mode = std::fs::metadata(&path).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }
}
