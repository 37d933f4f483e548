//! The sample cohort wired into a service, for tests and demos.

use bib_core::samples;

use crate::active::ActiveSnapshot;
use crate::recovery::RecoveryQueue;
use crate::service::Service;
use crate::tokens::TokenTable;

/// Token table holding the sample tokens (`TK-0001` for `M001`, and so on).
pub fn sample_tokens() -> TokenTable {
    let mut table = TokenTable::new();
    for (token, mother) in samples::SAMPLE_TOKENS {
        table.install(token, mother);
    }
    table
}

/// Service over the 2015-08 sample snapshot with an in-memory recovery queue.
pub fn sample_service() -> Service {
    let active = ActiveSnapshot::new(samples::cohort_2015_08()).expect("sample snapshot validates");
    Service::new(active, sample_tokens(), RecoveryQueue::in_memory())
}
