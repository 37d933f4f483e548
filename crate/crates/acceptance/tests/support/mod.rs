use std::cell::RefCell;

use bib_core::wire::soap_action_header;
use bib_core::{validate_snapshot, ChildRecord, DatasetSnapshot, Measurement, Timestamp};
use bib_service::Service;
use bib_sync::{Endpoint, TransportError};
use rand::seq::IndexedRandom;
use rand::Rng;

/// In-process endpoint recording action names, with optional crash injection.
pub struct Recording {
    pub service: Service,
    pub calls: RefCell<Vec<String>>,
    pub panic_at: Option<usize>,
}

impl Recording {
    pub fn new(service: Service) -> Self {
        Recording { service, calls: RefCell::new(Vec::new()), panic_at: None }
    }
}

impl Endpoint for Recording {
    fn post(&self, action: &str, body: &[u8]) -> Result<Vec<u8>, TransportError> {
        let n = {
            let mut calls = self.calls.borrow_mut();
            calls.push(action.to_string());
            calls.len() - 1
        };
        if self.panic_at == Some(n) {
            panic!("injected crash at call {n}");
        }
        Ok(self.service.dispatch(Some(&soap_action_header(action)), body).body)
    }
}

/// A valid, strictly newer successor of `s` with the same mothers.
pub fn mutate(s: &DatasetSnapshot, rng: &mut impl Rng, serial: &mut u32) -> DatasetSnapshot {
    let mut next = s.clone();
    next.update_date = Timestamp::from_unix(s.update_date.unix() + rng.random_range(1..40 * 86_400)).unwrap();

    for m in &mut next.measurements {
        if rng.random_bool(0.2) {
            m.height_cm = (m.height_cm + rng.random_range(-2.0..2.0)).clamp(25.0, 200.0);
        }
    }
    if rng.random_bool(0.4) {
        let mother = next.mothers.choose(rng).unwrap().mother_id.clone();
        let theirs: Vec<String> =
            next.children.iter().filter(|c| c.mother_id == mother).map(|c| c.child_id.clone()).collect();
        if theirs.len() > 1 {
            let gone = theirs.choose(rng).unwrap().clone();
            next.children.retain(|c| c.child_id != gone);
            next.measurements.retain(|m| m.child_id != gone);
        }
    }
    if rng.random_bool(0.4) {
        *serial += 1;
        let child_id = format!("C9{serial:03}");
        let mother = next.mothers.choose(rng).unwrap().mother_id.clone();
        next.children.push(ChildRecord { child_id: child_id.clone(), mother_id: mother });
        for age in [0u32, 6, 12].into_iter().take(rng.random_range(1..=3)) {
            next.measurements.push(Measurement {
                child_id: child_id.clone(),
                age_months: age,
                height_cm: 50.0 + f64::from(age) * 2.0 + rng.random_range(0.0..2.0),
                weight_kg: 3.3 + f64::from(age) * 0.5,
            });
        }
    }
    if rng.random_bool(0.5) {
        let child = next.children.choose(rng).unwrap().child_id.clone();
        let last = next.lookup_measurements(&child).last().map_or(0, |m| m.age_months);
        if last < 230 {
            let age = last + rng.random_range(1..=6);
            next.measurements.push(Measurement {
                child_id: child,
                age_months: age,
                height_cm: (60.0 + f64::from(age)).min(200.0),
                weight_kg: 10.0,
            });
        }
    }
    for m in &mut next.mothers {
        m.child_ids =
            next.children.iter().filter(|c| c.mother_id == m.mother_id).map(|c| c.child_id.clone()).collect();
    }
    assert!(validate_snapshot(&next).ok(), "{:?}", validate_snapshot(&next).errors);
    next
}

/// Independent evaluator: scans every segment and blends its end points by
/// weights. `None` outside the span.
pub fn brute_force(points: &[(f64, f64)], x: f64) -> Option<f64> {
    for (i, &(a, ha)) in points.iter().enumerate() {
        if a == x {
            return Some(ha);
        }
        if let Some(&(b, hb)) = points.get(i + 1) {
            if a < x && x < b {
                return Some((b - x) / (b - a) * ha + (x - a) / (b - a) * hb);
            }
        }
    }
    None
}
