//! SOAP 1.1 subset used between the phone client and the single `/soap`
//! endpoint.
//!
//! Canonical request (the encoder emits no whitespace between elements):
//!
//! ```text
//! <Envelope xmlns="http://schemas.xmlsoap.org/soap/envelope/">
//!   <Header><Auth xmlns="urn:bib-mobile">TK-0001</Auth></Header>
//!   <Body><GetLastUpdate xmlns="urn:bib-mobile"/></Body>
//! </Envelope>
//! ```
//!
//! Responses wrap fields in `<{Action}Response xmlns="urn:bib-mobile">`.
//! Repeated records use indexed sibling names (`Child.0`, `Knot.3.heightCm`).
//! Faults carry `<Fault><faultcode/><faultstring/></Fault>` in the body.

mod tree;

use std::fmt;
use std::str::FromStr;

use tree::{escape_into, is_xml_char, Element};

pub use crate::error::WireError;

pub const SOAP_ENV_NS: &str = "http://schemas.xmlsoap.org/soap/envelope/";
pub const BIB_NS: &str = "urn:bib-mobile";
pub const CONTENT_TYPE: &str = "text/xml; charset=utf-8";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestEnvelope {
    pub action: String,
    pub params: Vec<(String, String)>,
    pub auth_token: Option<String>,
}

impl RequestEnvelope {
    pub fn new(action: impl Into<String>) -> Self {
        RequestEnvelope { action: action.into(), params: Vec::new(), auth_token: None }
    }

    pub fn param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push((name.into(), value.into()));
        self
    }

    pub fn token(mut self, token: impl Into<String>) -> Self {
        self.auth_token = Some(token.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        lookup(&self.params, name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseEnvelope {
    pub action: String,
    pub fields: Vec<(String, String)>,
}

impl ResponseEnvelope {
    pub fn new(action: impl Into<String>) -> Self {
        ResponseEnvelope { action: action.into(), fields: Vec::new() }
    }

    pub fn field(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.fields.push((name.into(), value.into()));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.fields.push((name.into(), value.into()));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        lookup(&self.fields, name)
    }

    /// Values of `{prefix}.0`, `{prefix}.1`, ... up to the first gap.
    pub fn indexed(&self, prefix: &str) -> Vec<&str> {
        (0..)
            .map_while(|i| self.get(&format!("{prefix}.{i}")))
            .collect()
    }

    /// Number of `{prefix}.{i}.{member}` groups, counted up to the first gap.
    pub fn group_len(&self, prefix: &str, member: &str) -> usize {
        (0..)
            .take_while(|i| self.get(&format!("{prefix}.{i}.{member}")).is_some())
            .count()
    }
}

fn lookup<'a>(pairs: &'a [(String, String)], name: &str) -> Option<&'a str> {
    pairs.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultCode {
    AuthFailed,
    AccessDenied,
    NotFound,
    BadRequest,
    Internal,
}

impl FaultCode {
    pub const ALL: [FaultCode; 5] = [
        FaultCode::AuthFailed,
        FaultCode::AccessDenied,
        FaultCode::NotFound,
        FaultCode::BadRequest,
        FaultCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultCode::AuthFailed => "Client.AuthFailed",
            FaultCode::AccessDenied => "Client.AccessDenied",
            FaultCode::NotFound => "Client.NotFound",
            FaultCode::BadRequest => "Client.BadRequest",
            FaultCode::Internal => "Server.Internal",
        }
    }

    pub fn is_client(self) -> bool {
        self != FaultCode::Internal
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultCode {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // A namespace prefix such as `soap:Client.AuthFailed` is tolerated.
        let bare = s.trim().rsplit(':').next().unwrap_or_default();
        FaultCode::ALL
            .into_iter()
            .find(|c| c.as_str() == bare)
            .ok_or_else(|| WireError::invalid(format!("unknown fault code {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultEnvelope {
    pub code: FaultCode,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Response(ResponseEnvelope),
    Fault(FaultEnvelope),
}

/// `[A-Za-z][A-Za-z0-9]*`
pub fn is_action_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic()) && bytes.all(|b| b.is_ascii_alphanumeric())
}

/// An action-style head optionally followed by `.segment` parts of ASCII
/// alphanumerics, e.g. `updateDate`, `Child.0`, `Measurement.2.heightCm`.
pub fn is_field_name(name: &str) -> bool {
    let mut parts = name.split('.');
    parts.next().is_some_and(is_action_name)
        && parts.all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

/// Value of the `SOAPAction` HTTP header for an action.
pub fn soap_action_header(action: &str) -> String {
    format!("\"{BIB_NS}#{action}\"")
}

/// Inverse of [`soap_action_header`]; `None` if the header is not in that form.
pub fn parse_soap_action_header(value: &str) -> Option<&str> {
    value
        .trim()
        .trim_matches('"')
        .strip_prefix(BIB_NS)?
        .strip_prefix('#')
}

pub fn encode_request(e: &RequestEnvelope) -> Result<Vec<u8>, WireError> {
    check_action(&e.action)?;
    check_fields(&e.params, true)?;
    let mut out = open_envelope();
    if let Some(token) = &e.auth_token {
        check_value(token)?;
        out.push_str("<Header><Auth xmlns=\"urn:bib-mobile\">");
        escape_into(&mut out, token);
        out.push_str("</Auth></Header>");
    }
    out.push_str("<Body>");
    write_action_element(&mut out, &e.action, &e.params);
    out.push_str("</Body></Envelope>");
    Ok(out.into_bytes())
}

pub fn encode_response(e: &ResponseEnvelope) -> Result<Vec<u8>, WireError> {
    check_action(&e.action)?;
    check_fields(&e.fields, false)?;
    let mut out = open_envelope();
    out.push_str("<Body>");
    write_action_element(&mut out, &format!("{}Response", e.action), &e.fields);
    out.push_str("</Body></Envelope>");
    Ok(out.into_bytes())
}

/// Encodes a fault. Characters that XML cannot carry are replaced with U+FFFD.
pub fn encode_fault(code: FaultCode, reason: &str) -> Vec<u8> {
    let reason: String =
        reason.chars().map(|c| if is_xml_char(c) { c } else { '\u{FFFD}' }).collect();
    let mut out = open_envelope();
    out.push_str("<Body><Fault><faultcode>");
    out.push_str(code.as_str());
    out.push_str("</faultcode><faultstring>");
    escape_into(&mut out, &reason);
    out.push_str("</faultstring></Fault></Body></Envelope>");
    out.into_bytes()
}

pub fn decode_request(xml: &[u8]) -> Result<RequestEnvelope, WireError> {
    let root = tree::parse(xml)?;
    let (header, body) = split_envelope(&root)?;
    let mut auth_token = None;
    if let Some(header) = header {
        for entry in &header.children {
            if entry.is(BIB_NS, "Auth") {
                if auth_token.is_some() {
                    return Err(WireError::invalid("more than one Auth header block"));
                }
                auth_token = Some(entry.leaf_text()?.to_string());
            }
        }
    }
    let call = single_body_child(body)?;
    if call.namespace.as_deref() != Some(BIB_NS) {
        return Err(WireError::invalid(format!("<{}> is not in {BIB_NS}", call.local)));
    }
    check_action(&call.local)?;
    let params = read_fields(call)?;
    check_fields(&params, true)?;
    Ok(RequestEnvelope { action: call.local.clone(), params, auth_token })
}

pub fn decode_response(xml: &[u8]) -> Result<Reply, WireError> {
    let root = tree::parse(xml)?;
    let (_, body) = split_envelope(&root)?;
    let payload = single_body_child(body)?;
    if payload.is(SOAP_ENV_NS, "Fault") {
        return decode_fault(payload).map(Reply::Fault);
    }
    if payload.namespace.as_deref() != Some(BIB_NS) {
        return Err(WireError::invalid(format!("<{}> is not in {BIB_NS}", payload.local)));
    }
    let action = payload
        .local
        .strip_suffix("Response")
        .ok_or_else(|| WireError::invalid(format!("<{}> is not a response element", payload.local)))?;
    check_action(action)?;
    let fields = read_fields(payload)?;
    Ok(Reply::Response(ResponseEnvelope { action: action.to_string(), fields }))
}

fn decode_fault(fault: &Element) -> Result<FaultEnvelope, WireError> {
    let mut code = None;
    let mut reason = None;
    for part in &fault.children {
        match part.local.as_str() {
            "faultcode" if code.is_none() => code = Some(part.leaf_text()?.parse()?),
            "faultstring" if reason.is_none() => reason = Some(part.leaf_text()?.to_string()),
            "faultactor" | "detail" => {}
            other => return Err(WireError::invalid(format!("unexpected <{other}> in Fault"))),
        }
    }
    match (code, reason) {
        (Some(code), Some(reason)) => Ok(FaultEnvelope { code, reason }),
        _ => Err(WireError::invalid("Fault needs faultcode and faultstring")),
    }
}

fn open_envelope() -> String {
    let mut out = String::with_capacity(256);
    out.push_str("<Envelope xmlns=\"http://schemas.xmlsoap.org/soap/envelope/\">");
    out
}

fn write_action_element(out: &mut String, element: &str, fields: &[(String, String)]) {
    out.push('<');
    out.push_str(element);
    out.push_str(" xmlns=\"urn:bib-mobile\"");
    if fields.is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for (name, value) in fields {
        out.push('<');
        out.push_str(name);
        out.push('>');
        escape_into(out, value);
        out.push_str("</");
        out.push_str(name);
        out.push('>');
    }
    out.push_str("</");
    out.push_str(element);
    out.push('>');
}

fn split_envelope(root: &Element) -> Result<(Option<&Element>, &Element), WireError> {
    if !root.is(SOAP_ENV_NS, "Envelope") {
        return Err(WireError::invalid("document element is not a SOAP Envelope"));
    }
    match root.children.as_slice() {
        [body] if body.is(SOAP_ENV_NS, "Body") => Ok((None, body)),
        [header, body] if header.is(SOAP_ENV_NS, "Header") && body.is(SOAP_ENV_NS, "Body") => {
            Ok((Some(header), body))
        }
        _ => Err(WireError::invalid("Envelope must hold an optional Header followed by one Body")),
    }
}

fn single_body_child(body: &Element) -> Result<&Element, WireError> {
    match body.children.as_slice() {
        [only] => Ok(only),
        [] => Err(WireError::invalid("Body is empty")),
        _ => Err(WireError::invalid("Body must hold exactly one element")),
    }
}

fn read_fields(parent: &Element) -> Result<Vec<(String, String)>, WireError> {
    if !parent.text.trim_matches([' ', '\t', '\n', '\r']).is_empty() {
        return Err(WireError::invalid(format!("<{}> must hold elements, not text", parent.local)));
    }
    parent
        .children
        .iter()
        .map(|child| {
            if child.namespace.as_deref() != Some(BIB_NS) {
                return Err(WireError::invalid(format!("<{}> is not in {BIB_NS}", child.local)));
            }
            if !is_field_name(&child.local) {
                return Err(WireError::invalid(format!("bad field name {:?}", child.local)));
            }
            Ok((child.local.clone(), child.leaf_text()?.to_string()))
        })
        .collect()
}

fn check_action(action: &str) -> Result<(), WireError> {
    if is_action_name(action) {
        Ok(())
    } else {
        Err(WireError::invalid(format!("bad action name {action:?}")))
    }
}

fn check_fields(fields: &[(String, String)], unique: bool) -> Result<(), WireError> {
    for (i, (name, value)) in fields.iter().enumerate() {
        if !is_field_name(name) {
            return Err(WireError::invalid(format!("bad field name {name:?}")));
        }
        if unique && fields[..i].iter().any(|(n, _)| n == name) {
            return Err(WireError::invalid(format!("duplicate parameter {name:?}")));
        }
        check_value(value)?;
    }
    Ok(())
}

fn check_value(value: &str) -> Result<(), WireError> {
    match value.chars().find(|c| !is_xml_char(*c)) {
        None => Ok(()),
        Some(c) => Err(WireError::invalid(format!("U+{:04X} cannot be carried in XML", c as u32))),
    }
}
