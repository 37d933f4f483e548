//! Shared building blocks for the cohort service and the phone-side client:
//! the anonymized cohort data model and its file format, the SOAP-subset wire
//! codec, and the pure growth computations behind the child views.

pub mod analytics;
pub mod cohort;
pub mod error;
pub mod protocol;
pub mod samples;
pub mod timestamp;
pub mod wire;

pub use cohort::{
    parse_cohort_file, validate_snapshot, write_cohort_file, ChildRecord, DatasetSnapshot, Knot,
    Measurement, MotherRecord, ReferenceCurve,
};
pub use error::{AnalyticsError, CohortError, WireError};
pub use timestamp::Timestamp;
