//! Byte-level transport to the service.

use std::time::Duration;

use bib_core::wire::{soap_action_header, CONTENT_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transport: {0}")]
pub struct TransportError(pub String);

/// Sends one encoded request envelope and returns the reply envelope bytes.
/// A fault reply is a successful transport exchange.
pub trait Endpoint {
    fn post(&self, action: &str, body: &[u8]) -> Result<Vec<u8>, TransportError>;
}

impl<F> Endpoint for F
where
    F: Fn(&str, &[u8]) -> Result<Vec<u8>, TransportError>,
{
    fn post(&self, action: &str, body: &[u8]) -> Result<Vec<u8>, TransportError> {
        self(action, body)
    }
}

/// HTTP POST to `{base_url}/soap`.
pub struct HttpEndpoint {
    url: String,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(30))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEndpoint { url: format!("{}/soap", base_url.trim_end_matches('/')), agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Endpoint for HttpEndpoint {
    fn post(&self, action: &str, body: &[u8]) -> Result<Vec<u8>, TransportError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Content-Type", CONTENT_TYPE)
            .header("SOAPAction", soap_action_header(action))
            .send(body)
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 && status != 500 {
            return Err(TransportError(format!("unexpected HTTP status {status}")));
        }
        resp.body_mut().read_to_vec().map_err(|e| TransportError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_host_is_transport_error() {
        // Port 9 on localhost is closed in any sane test environment.
        let ep = HttpEndpoint::with_timeout("http://127.0.0.1:9/", Duration::from_secs(2));
        assert_eq!(ep.url(), "http://127.0.0.1:9/soap");
        assert!(ep.post("GetLastUpdate", b"<x/>").is_err());
    }
}
