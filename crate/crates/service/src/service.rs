//! Request handling: authentication, per-mother access control and dispatch
//! of decoded envelopes. Sessions are stateless; the token is checked on
//! every request.

use std::sync::Arc;

use arc_swap::ArcSwap;
use bib_core::protocol::{self, PARAM_CHILD_ID, PARAM_HINT, PARAM_TOKEN};
use bib_core::wire::{self, FaultCode, RequestEnvelope, ResponseEnvelope};
use bib_core::{DatasetSnapshot, Knot, Measurement, Timestamp};

use crate::active::ActiveSnapshot;
use crate::error::{RecoveryError, ServiceError, SwapError};
use crate::recovery::{Listing, RecoveryQueue, RecoveryRequest};
use crate::tokens::TokenTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotherSession {
    pub mother_id: String,
    pub token_fingerprint: String,
}

/// An encoded reply: HTTP status and XML body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoapReply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl SoapReply {
    fn fault(err: &ServiceError) -> Self {
        SoapReply { status: 500, body: wire::encode_fault(err.fault_code(), &err.to_string()) }
    }
}

struct Inner {
    active: ActiveSnapshot,
    tokens: ArcSwap<TokenTable>,
    recovery: RecoveryQueue,
}

#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    pub fn new(active: ActiveSnapshot, tokens: TokenTable, recovery: RecoveryQueue) -> Self {
        Service {
            inner: Arc::new(Inner { active, tokens: ArcSwap::from_pointee(tokens), recovery }),
        }
    }

    pub fn snapshot(&self) -> Arc<DatasetSnapshot> {
        self.inner.active.load()
    }

    pub fn swap_snapshot(&self, new: DatasetSnapshot) -> Result<Timestamp, SwapError> {
        let previous = self.inner.active.swap_snapshot(new)?;
        tracing::info!(%previous, current = %self.inner.active.update_date(), "snapshot swapped");
        Ok(previous)
    }

    pub fn replace_tokens(&self, tokens: TokenTable) {
        tracing::info!(entries = tokens.len(), "token table replaced");
        self.inner.tokens.store(Arc::new(tokens));
    }

    pub fn recovery_requests(&self, listing: Listing) -> Vec<RecoveryRequest> {
        self.inner.recovery.list(listing)
    }

    pub fn authenticate(&self, token: &str) -> Result<MotherSession, ServiceError> {
        self.authenticate_in(&self.snapshot(), token)
    }

    fn authenticate_in(
        &self,
        snapshot: &DatasetSnapshot,
        token: &str,
    ) -> Result<MotherSession, ServiceError> {
        if token.is_empty() {
            return Err(ServiceError::AuthFailed);
        }
        let found = self.inner.tokens.load().verify(token).ok_or(ServiceError::AuthFailed)?;
        if snapshot.mother(&found.mother_id).is_none() {
            tracing::warn!(fingerprint = %short(&found.fingerprint), "token for a mother absent from the snapshot");
            return Err(ServiceError::AuthFailed);
        }
        Ok(MotherSession { mother_id: found.mother_id, token_fingerprint: found.fingerprint })
    }

    pub fn get_last_update(&self, _s: &MotherSession) -> Timestamp {
        self.inner.active.update_date()
    }

    pub fn get_children(&self, s: &MotherSession) -> Vec<String> {
        children_of(&self.snapshot(), s)
    }

    pub fn get_measurements(
        &self,
        s: &MotherSession,
        child_id: &str,
    ) -> Result<Vec<Measurement>, ServiceError> {
        measurements_of(&self.snapshot(), s, child_id)
    }

    pub fn get_reference_curve(&self, _s: &MotherSession) -> Vec<Knot> {
        self.snapshot().reference.knots.clone()
    }

    pub fn request_id_recovery(&self, hint: &str) -> Result<u64, ServiceError> {
        let id = self.inner.recovery.submit(hint).map_err(|e| match e {
            RecoveryError::EmptyHint | RecoveryError::HintTooLong(_) => {
                ServiceError::BadRequest(e.to_string())
            }
            other => ServiceError::Internal(other.to_string()),
        })?;
        tracing::info!(request_id = id, "recovery request queued");
        Ok(id)
    }

    /// Handles one POST body. `soap_action` is the raw SOAPAction header, if
    /// sent; it must name the same action as the body.
    pub fn dispatch(&self, soap_action: Option<&str>, body: &[u8]) -> SoapReply {
        let snapshot = self.snapshot();
        let result = wire::decode_request(body)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))
            .and_then(|req| {
                check_soap_action(soap_action, &req.action)?;
                self.handle(&snapshot, &req)
            })
            .and_then(|resp| {
                wire::encode_response(&resp).map_err(|e| ServiceError::Internal(e.to_string()))
            });
        match result {
            Ok(body) => SoapReply { status: 200, body },
            Err(err) => {
                if err.fault_code() == FaultCode::Internal {
                    tracing::error!(%err, "request failed");
                } else {
                    tracing::debug!(code = %err.fault_code(), "request faulted");
                }
                SoapReply::fault(&err)
            }
        }
    }

    fn handle(
        &self,
        snapshot: &DatasetSnapshot,
        req: &RequestEnvelope,
    ) -> Result<ResponseEnvelope, ServiceError> {
        let action = req.action.as_str();
        if !protocol::ACTIONS.contains(&action) {
            return Err(ServiceError::BadRequest(format!("unknown action {action:?}")));
        }
        match action {
            protocol::AUTHENTICATE => {
                let token = param(req, PARAM_TOKEN)?;
                let s = self.authenticate_in(snapshot, token)?;
                return Ok(protocol::authenticate_response(&s.mother_id));
            }
            protocol::REQUEST_ID_RECOVERY => {
                let id = self.request_id_recovery(param(req, PARAM_HINT)?)?;
                return Ok(protocol::recovery_response(id));
            }
            _ => {}
        }
        let token = req.auth_token.as_deref().ok_or(ServiceError::AuthFailed)?;
        let s = self.authenticate_in(snapshot, token)?;
        match action {
            protocol::GET_LAST_UPDATE => Ok(protocol::last_update_response(snapshot.update_date)),
            protocol::GET_CHILDREN => {
                let ids = children_of(snapshot, &s);
                Ok(protocol::children_response(ids.iter().map(String::as_str)))
            }
            protocol::GET_MEASUREMENTS => {
                let ms = measurements_of(snapshot, &s, param(req, PARAM_CHILD_ID)?)?;
                Ok(protocol::measurements_response(&ms))
            }
            protocol::GET_REFERENCE_CURVE => Ok(protocol::reference_response(&snapshot.reference)),
            _ => Err(ServiceError::Internal(format!("no handler for {action}"))),
        }
    }
}

fn children_of(snapshot: &DatasetSnapshot, s: &MotherSession) -> Vec<String> {
    snapshot.lookup_children(&s.mother_id).into_iter().map(|c| c.child_id.clone()).collect()
}

fn measurements_of(
    snapshot: &DatasetSnapshot,
    s: &MotherSession,
    child_id: &str,
) -> Result<Vec<Measurement>, ServiceError> {
    let child = snapshot
        .child(child_id)
        .ok_or_else(|| ServiceError::NotFound(format!("child {child_id}")))?;
    if child.mother_id != s.mother_id {
        return Err(ServiceError::AccessDenied(format!("child {child_id}")));
    }
    Ok(snapshot.lookup_measurements(child_id).into_iter().cloned().collect())
}

fn param<'a>(req: &'a RequestEnvelope, name: &str) -> Result<&'a str, ServiceError> {
    let extra = req.params.iter().find(|(n, _)| n != name);
    if let Some((n, _)) = extra {
        return Err(ServiceError::BadRequest(format!("unexpected parameter {n}")));
    }
    req.get(name)
        .ok_or_else(|| ServiceError::BadRequest(format!("{} requires {name}", req.action)))
}

fn check_soap_action(header: Option<&str>, action: &str) -> Result<(), ServiceError> {
    match header.map(wire::parse_soap_action_header) {
        None => Ok(()),
        Some(Some(named)) if named == action => Ok(()),
        Some(_) => Err(ServiceError::BadRequest("SOAPAction header does not match body".into())),
    }
}

fn short(fingerprint: &str) -> &str {
    &fingerprint[..fingerprint.len().min(12)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;
    use bib_core::wire::{decode_response, encode_request, Reply};

    fn call(service: &Service, req: RequestEnvelope) -> (u16, Reply) {
        let reply = service.dispatch(None, &encode_request(&req).unwrap());
        (reply.status, decode_response(&reply.body).unwrap())
    }

    fn fault_code(reply: Reply) -> FaultCode {
        match reply {
            Reply::Fault(f) => f.code,
            Reply::Response(r) => panic!("expected fault, got {r:?}"),
        }
    }

    #[test]
    fn authenticate_maps_token_to_mother() {
        let svc = fixture::sample_service();
        assert_eq!(svc.authenticate("TK-0001").unwrap().mother_id, "M001");
        assert_eq!(svc.authenticate("WRONG"), Err(ServiceError::AuthFailed));
        assert_eq!(svc.authenticate(""), Err(ServiceError::AuthFailed));
    }

    #[test]
    fn measurements_respect_ownership() {
        let svc = fixture::sample_service();
        let s = svc.authenticate("TK-0001").unwrap();
        assert_eq!(svc.get_measurements(&s, "C001").unwrap().len(), 3);
        assert!(matches!(svc.get_measurements(&s, "C003"), Err(ServiceError::AccessDenied(_))));
        assert!(matches!(svc.get_measurements(&s, "CX"), Err(ServiceError::NotFound(_))));
    }

    #[test]
    fn dispatch_get_children() {
        let svc = fixture::sample_service();
        let (status, reply) = call(&svc, RequestEnvelope::new("GetChildren").token("TK-0001"));
        assert_eq!(status, 200);
        let Reply::Response(r) = reply else { panic!() };
        assert_eq!(protocol::parse_children(&r).unwrap(), ["C001", "C002"]);
    }

    #[test]
    fn dispatch_faults() {
        let svc = fixture::sample_service();
        let reply = svc.dispatch(None, b"<Envelope");
        assert_eq!(reply.status, 500);
        assert_eq!(fault_code(decode_response(&reply.body).unwrap()), FaultCode::BadRequest);

        let (status, reply) = call(&svc, RequestEnvelope::new("Frobnicate").token("TK-0001"));
        assert_eq!((status, fault_code(reply)), (500, FaultCode::BadRequest));

        let (_, reply) = call(&svc, RequestEnvelope::new("GetChildren"));
        assert_eq!(fault_code(reply), FaultCode::AuthFailed);

        let (_, reply) = call(&svc, RequestEnvelope::new("GetChildren").token("WRONG"));
        assert_eq!(fault_code(reply), FaultCode::AuthFailed);

        let (_, reply) = call(&svc, RequestEnvelope::new("GetMeasurements").token("TK-0001"));
        assert_eq!(fault_code(reply), FaultCode::BadRequest);

        let req = RequestEnvelope::new("GetMeasurements").token("TK-0001").param("childId", "C003");
        assert_eq!(fault_code(call(&svc, req).1), FaultCode::AccessDenied);
    }

    #[test]
    fn soap_action_header_must_agree() {
        let svc = fixture::sample_service();
        let body = encode_request(&RequestEnvelope::new("GetLastUpdate").token("TK-0001")).unwrap();
        assert_eq!(svc.dispatch(Some("\"urn:bib-mobile#GetLastUpdate\""), &body).status, 200);
        assert_eq!(svc.dispatch(Some("\"urn:bib-mobile#GetChildren\""), &body).status, 500);
        assert_eq!(svc.dispatch(Some("garbage"), &body).status, 500);
    }

    #[test]
    fn recovery_is_unauthenticated_and_sequential() {
        let svc = fixture::sample_service();
        let req = RequestEnvelope::new("RequestIdRecovery").param("hint", "lost phone, green case");
        let Reply::Response(r) = call(&svc, req.clone()).1 else { panic!() };
        assert_eq!(protocol::parse_recovery(&r).unwrap(), 1);
        let Reply::Response(r) = call(&svc, req).1 else { panic!() };
        assert_eq!(protocol::parse_recovery(&r).unwrap(), 2);
        let empty = RequestEnvelope::new("RequestIdRecovery").param("hint", " ");
        assert_eq!(fault_code(call(&svc, empty).1), FaultCode::BadRequest);
    }

    #[test]
    fn last_update_follows_swap() {
        let svc = fixture::sample_service();
        let s = svc.authenticate("TK-0001").unwrap();
        assert_eq!(svc.get_last_update(&s).to_string(), "2015-08-01T00:00:00Z");
        svc.swap_snapshot(bib_core::samples::cohort_2015_09()).unwrap();
        assert_eq!(svc.get_last_update(&s).to_string(), "2015-09-01T00:00:00Z");
        assert_eq!(svc.get_children(&s), ["C001"]);
    }
}
