//! Anonymized cohort data: mothers and children linked by opaque IDs,
//! per-child measurements and the reference ("national average") height curve.
//!
//! A [`DatasetSnapshot`] is the unit of import, serving and sync. It is plain
//! data; once constructed it is shared read-only (see `bib-service` for the
//! atomic swap of the active snapshot).

mod file;
mod validate;

pub use file::{parse_cohort_file, parse_cohort_file_with_lines, write_cohort_file, SourceLines};
pub use validate::{validate_snapshot, Locator, Rule, ValidationReport, Violation};

use sha2::{Digest, Sha256};

use crate::timestamp::Timestamp;

pub const MAX_AGE_MONTHS: u32 = 240;
pub const HEIGHT_BOUNDS_CM: (f64, f64) = (20.0, 220.0);
pub const WEIGHT_BOUNDS_KG: (f64, f64) = (0.5, 150.0);

#[derive(Debug, Clone, PartialEq)]
pub struct MotherRecord {
    pub mother_id: String,
    /// Children in file order; derived from the `#CHILDREN` section at parse time.
    pub child_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChildRecord {
    pub child_id: String,
    pub mother_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub child_id: String,
    pub age_months: u32,
    pub height_cm: f64,
    pub weight_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Height,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub age_months: u32,
    pub height_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceCurve {
    pub metric: Metric,
    pub knots: Vec<Knot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSnapshot {
    pub update_date: Timestamp,
    pub mothers: Vec<MotherRecord>,
    pub children: Vec<ChildRecord>,
    pub measurements: Vec<Measurement>,
    pub reference: ReferenceCurve,
}

/// Record counts as (mothers, children, measurements).
pub type Counts = (usize, usize, usize);

impl DatasetSnapshot {
    pub fn counts(&self) -> Counts {
        (self.mothers.len(), self.children.len(), self.measurements.len())
    }

    pub fn mother(&self, mother_id: &str) -> Option<&MotherRecord> {
        self.mothers.iter().find(|m| m.mother_id == mother_id)
    }

    pub fn child(&self, child_id: &str) -> Option<&ChildRecord> {
        self.children.iter().find(|c| c.child_id == child_id)
    }

    /// Children whose `mother_id` matches, in file order. Unknown mother yields an empty list.
    pub fn lookup_children(&self, mother_id: &str) -> Vec<&ChildRecord> {
        self.children.iter().filter(|c| c.mother_id == mother_id).collect()
    }

    /// All measurements of one child, ascending by age.
    pub fn lookup_measurements(&self, child_id: &str) -> Vec<&Measurement> {
        let mut found: Vec<&Measurement> = self
            .measurements
            .iter()
            .filter(|m| m.child_id == child_id)
            .collect();
        found.sort_by_key(|m| m.age_months);
        found
    }

    /// The part of the snapshot visible to one mother: her record, her
    /// children, their measurements and the full reference curve.
    pub fn slice_for_mother(&self, mother_id: &str) -> Option<DatasetSnapshot> {
        let mother = self.mother(mother_id)?.clone();
        let children: Vec<ChildRecord> =
            self.lookup_children(mother_id).into_iter().cloned().collect();
        let measurements = children
            .iter()
            .flat_map(|c| self.lookup_measurements(&c.child_id))
            .cloned()
            .collect();
        Some(DatasetSnapshot {
            update_date: self.update_date,
            mothers: vec![mother],
            children,
            measurements,
            reference: self.reference.clone(),
        })
    }

    /// SHA-256 over the canonical file serialization, hex encoded.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(write_cohort_file(self).as_bytes()))
    }
}

/// Opaque identifier shape: ASCII alphanumerics plus `-`/`_`, at most 64
/// characters, containing at least one digit. Plain words are refused so a
/// formal name cannot pass as an ID.
pub fn is_opaque_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
        && id.bytes().any(|b| b.is_ascii_digit())
}
