//! The active snapshot: lock-free reads, serialized replacement.

use std::sync::{Arc, Mutex};

use arc_swap::ArcSwap;
use bib_core::cohort::{validate_snapshot, ValidationReport};
use bib_core::{DatasetSnapshot, Timestamp};

use crate::error::SwapError;

pub struct ActiveSnapshot {
    current: ArcSwap<DatasetSnapshot>,
    writer: Mutex<()>,
}

impl ActiveSnapshot {
    /// Installs the first snapshot. It must validate.
    pub fn new(initial: DatasetSnapshot) -> Result<Self, SwapError> {
        check(&initial)?;
        Ok(ActiveSnapshot { current: ArcSwap::from_pointee(initial), writer: Mutex::new(()) })
    }

    /// A consistent view; holders keep it alive across later swaps.
    pub fn load(&self) -> Arc<DatasetSnapshot> {
        self.current.load_full()
    }

    pub fn update_date(&self) -> Timestamp {
        self.current.load().update_date
    }

    /// Replaces the active snapshot if `new` validates and is strictly newer.
    /// Returns the replaced snapshot's update date.
    pub fn swap_snapshot(&self, new: DatasetSnapshot) -> Result<Timestamp, SwapError> {
        check(&new)?;
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let previous = self.current.load().update_date;
        if new.update_date <= previous {
            return Err(SwapError::StaleImport { current: previous, offered: new.update_date });
        }
        self.current.store(Arc::new(new));
        Ok(previous)
    }
}

fn check(s: &DatasetSnapshot) -> Result<(), SwapError> {
    let report: ValidationReport = validate_snapshot(s);
    if report.ok() {
        Ok(())
    } else {
        Err(SwapError::InvalidSnapshot(report))
    }
}
