//! The cohort web service: one SOAP endpoint serving the active snapshot to
//! authenticated mothers, a token table, and the forgot-ID request queue.

pub mod active;
pub mod datadir;
pub mod error;
pub mod fixture;
pub mod http;
pub mod recovery;
pub mod service;
pub mod tokens;

pub use active::ActiveSnapshot;
pub use datadir::DataDir;
pub use error::{RecoveryError, ServiceError, StoreError, SwapError};
pub use recovery::{Listing, RecoveryQueue, RecoveryRequest, RecoveryStatus};
pub use service::{MotherSession, Service, SoapReply};
pub use tokens::TokenTable;
