//! Phone-side half of the system: a local store of one mother's slice of the
//! cohort snapshot, refreshed wholesale when the server's update date moves.

pub mod client;
pub mod endpoint;
pub mod error;
pub mod store;

pub use client::{needs_refresh, Freshness, LocalStore, SyncKind, SyncOutcome};
pub use endpoint::{Endpoint, HttpEndpoint, TransportError};
pub use error::{StoreFileError, SyncError};
pub use store::StoreState;
