//! Action names and the field layout of each response, shared by the
//! service and the client so both sides agree on the indexed-field encoding.

use crate::cohort::{Knot, Measurement, Metric, ReferenceCurve};
use crate::timestamp::Timestamp;
use crate::wire::{ResponseEnvelope, WireError};

pub const AUTHENTICATE: &str = "Authenticate";
pub const GET_LAST_UPDATE: &str = "GetLastUpdate";
pub const GET_CHILDREN: &str = "GetChildren";
pub const GET_MEASUREMENTS: &str = "GetMeasurements";
pub const GET_REFERENCE_CURVE: &str = "GetReferenceCurve";
pub const REQUEST_ID_RECOVERY: &str = "RequestIdRecovery";

/// Every action the endpoint serves. None of them writes cohort data.
pub const ACTIONS: [&str; 6] = [
    AUTHENTICATE,
    GET_LAST_UPDATE,
    GET_CHILDREN,
    GET_MEASUREMENTS,
    GET_REFERENCE_CURVE,
    REQUEST_ID_RECOVERY,
];

/// Actions callable without an `Auth` header.
pub const UNAUTHENTICATED: [&str; 2] = [AUTHENTICATE, REQUEST_ID_RECOVERY];

pub const PARAM_TOKEN: &str = "token";
pub const PARAM_CHILD_ID: &str = "childId";
pub const PARAM_HINT: &str = "hint";

pub const FIELD_MOTHER_ID: &str = "motherId";
pub const FIELD_UPDATE_DATE: &str = "updateDate";
pub const FIELD_REQUEST_ID: &str = "requestId";

pub fn authenticate_response(mother_id: &str) -> ResponseEnvelope {
    ResponseEnvelope::new(AUTHENTICATE).field(FIELD_MOTHER_ID, mother_id)
}

pub fn parse_authenticate(r: &ResponseEnvelope) -> Result<String, WireError> {
    expect_action(r, AUTHENTICATE)?;
    required(r, FIELD_MOTHER_ID).map(str::to_string)
}

pub fn last_update_response(date: Timestamp) -> ResponseEnvelope {
    ResponseEnvelope::new(GET_LAST_UPDATE).field(FIELD_UPDATE_DATE, date.to_string())
}

pub fn parse_last_update(r: &ResponseEnvelope) -> Result<Timestamp, WireError> {
    expect_action(r, GET_LAST_UPDATE)?;
    required(r, FIELD_UPDATE_DATE)?
        .parse()
        .map_err(|e| WireError::InvalidEnvelope(format!("{e}")))
}

pub fn children_response<'a>(child_ids: impl IntoIterator<Item = &'a str>) -> ResponseEnvelope {
    let mut r = ResponseEnvelope::new(GET_CHILDREN);
    for (i, id) in child_ids.into_iter().enumerate() {
        r.push(format!("Child.{i}"), id);
    }
    r
}

pub fn parse_children(r: &ResponseEnvelope) -> Result<Vec<String>, WireError> {
    expect_action(r, GET_CHILDREN)?;
    let ids: Vec<String> = r.indexed("Child").into_iter().map(str::to_string).collect();
    if ids.len() != r.fields.len() {
        return Err(WireError::InvalidEnvelope("unexpected fields in GetChildren response".into()));
    }
    Ok(ids)
}

pub fn measurements_response<'a>(
    measurements: impl IntoIterator<Item = &'a Measurement>,
) -> ResponseEnvelope {
    let mut r = ResponseEnvelope::new(GET_MEASUREMENTS);
    for (i, m) in measurements.into_iter().enumerate() {
        r.push(format!("Measurement.{i}.ageMonths"), m.age_months.to_string());
        r.push(format!("Measurement.{i}.heightCm"), format!("{:?}", m.height_cm));
        r.push(format!("Measurement.{i}.weightKg"), format!("{:?}", m.weight_kg));
    }
    r
}

pub fn parse_measurements(child_id: &str, r: &ResponseEnvelope) -> Result<Vec<Measurement>, WireError> {
    expect_action(r, GET_MEASUREMENTS)?;
    let n = r.group_len("Measurement", "ageMonths");
    if r.fields.len() != n * 3 {
        return Err(WireError::InvalidEnvelope("incomplete measurement groups".into()));
    }
    (0..n)
        .map(|i| {
            Ok(Measurement {
                child_id: child_id.to_string(),
                age_months: number(r, &format!("Measurement.{i}.ageMonths"))?,
                height_cm: number(r, &format!("Measurement.{i}.heightCm"))?,
                weight_kg: number(r, &format!("Measurement.{i}.weightKg"))?,
            })
        })
        .collect()
}

pub fn reference_response(curve: &ReferenceCurve) -> ResponseEnvelope {
    let mut r = ResponseEnvelope::new(GET_REFERENCE_CURVE);
    for (i, k) in curve.knots.iter().enumerate() {
        r.push(format!("Knot.{i}.ageMonths"), k.age_months.to_string());
        r.push(format!("Knot.{i}.heightCm"), format!("{:?}", k.height_cm));
    }
    r
}

pub fn parse_reference(r: &ResponseEnvelope) -> Result<ReferenceCurve, WireError> {
    expect_action(r, GET_REFERENCE_CURVE)?;
    let n = r.group_len("Knot", "ageMonths");
    if r.fields.len() != n * 2 {
        return Err(WireError::InvalidEnvelope("incomplete knot groups".into()));
    }
    let knots = (0..n)
        .map(|i| {
            Ok(Knot {
                age_months: number(r, &format!("Knot.{i}.ageMonths"))?,
                height_cm: number(r, &format!("Knot.{i}.heightCm"))?,
            })
        })
        .collect::<Result<_, WireError>>()?;
    Ok(ReferenceCurve { metric: Metric::Height, knots })
}

pub fn recovery_response(request_id: u64) -> ResponseEnvelope {
    ResponseEnvelope::new(REQUEST_ID_RECOVERY).field(FIELD_REQUEST_ID, request_id.to_string())
}

pub fn parse_recovery(r: &ResponseEnvelope) -> Result<u64, WireError> {
    expect_action(r, REQUEST_ID_RECOVERY)?;
    number(r, FIELD_REQUEST_ID)
}

fn expect_action(r: &ResponseEnvelope, action: &str) -> Result<(), WireError> {
    if r.action == action {
        Ok(())
    } else {
        Err(WireError::InvalidEnvelope(format!("expected {action} response, got {}", r.action)))
    }
}

fn required<'a>(r: &'a ResponseEnvelope, name: &str) -> Result<&'a str, WireError> {
    r.get(name)
        .ok_or_else(|| WireError::InvalidEnvelope(format!("{} response lacks {name}", r.action)))
}

fn number<T: std::str::FromStr>(r: &ResponseEnvelope, name: &str) -> Result<T, WireError> {
    let text = required(r, name)?;
    text.parse()
        .map_err(|_| WireError::InvalidEnvelope(format!("{name} is not a number: {text:?}")))
}
