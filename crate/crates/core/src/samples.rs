//! Synthetic sample cohorts. No real participant data.
//!
//! `COHORT_2015_08`: 3 mothers, 5 children, 40 measurements, 25 reference
//! knots. `COHORT_2015_09` is the next delivery: child C002 withdrawn, two
//! extra measurements. Sample tokens map `TK-0001..3` to `M001..3`.

use crate::cohort::{parse_cohort_file, DatasetSnapshot};

pub const COHORT_2015_08: &str = include_str!("../fixtures/cohort_2015-08.cohort");
pub const COHORT_2015_09: &str = include_str!("../fixtures/cohort_2015-09.cohort");

pub const SAMPLE_TOKENS: [(&str, &str); 3] =
    [("TK-0001", "M001"), ("TK-0002", "M002"), ("TK-0003", "M003")];

pub fn cohort_2015_08() -> DatasetSnapshot {
    parse_cohort_file(COHORT_2015_08).expect("bundled sample parses")
}

pub fn cohort_2015_09() -> DatasetSnapshot {
    parse_cohort_file(COHORT_2015_09).expect("bundled sample parses")
}
