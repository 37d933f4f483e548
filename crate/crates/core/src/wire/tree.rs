//! Minimal namespace-aware element tree on top of `quick-xml`, enough for
//! envelope decoding. Text is kept only for leaf elements; whitespace between
//! sibling elements is discarded.

use quick_xml::events::Event;
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use crate::error::WireError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Element {
    pub namespace: Option<String>,
    pub local: String,
    pub children: Vec<Element>,
    pub text: String,
}

impl Element {
    pub fn is(&self, namespace: &str, local: &str) -> bool {
        self.namespace.as_deref() == Some(namespace) && self.local == local
    }

    /// Leaf text; elements with element children have no value.
    pub fn leaf_text(&self) -> Result<&str, WireError> {
        if self.children.is_empty() {
            Ok(&self.text)
        } else {
            Err(WireError::invalid(format!("<{}> must hold text, not elements", self.local)))
        }
    }
}

struct Open {
    element: Element,
    has_content_text: bool,
}

pub(crate) fn parse(bytes: &[u8]) -> Result<Element, WireError> {
    let text = std::str::from_utf8(bytes).map_err(|e| WireError::malformed(e.to_string()))?;
    let mut reader = NsReader::from_str(text);
    let config = reader.config_mut();
    config.expand_empty_elements = true;
    config.check_end_names = true;
    config.check_comments = true;

    let mut stack: Vec<Open> = Vec::new();
    let mut root: Option<Element> = None;
    let mut seen_markup = false;

    loop {
        let (resolved, event) =
            reader.read_resolved_event().map_err(|e| WireError::malformed(e.to_string()))?;
        match event {
            Event::Start(start) => {
                if root.is_some() {
                    return Err(WireError::malformed("content after the document element"));
                }
                for attr in start.attributes() {
                    attr.map_err(|e| WireError::malformed(e.to_string()))?;
                }
                let namespace = match resolved {
                    ResolveResult::Bound(ns) => Some(
                        std::str::from_utf8(ns.as_ref())
                            .map_err(|e| WireError::malformed(e.to_string()))?
                            .to_string(),
                    ),
                    ResolveResult::Unbound => None,
                    ResolveResult::Unknown(prefix) => {
                        return Err(WireError::malformed(format!(
                            "undeclared namespace prefix {:?}",
                            String::from_utf8_lossy(&prefix)
                        )))
                    }
                };
                let local = std::str::from_utf8(start.local_name().as_ref())
                    .map_err(|e| WireError::malformed(e.to_string()))?
                    .to_string();
                seen_markup = true;
                stack.push(Open {
                    element: Element { namespace, local, children: Vec::new(), text: String::new() },
                    has_content_text: false,
                });
            }
            Event::End(_) => {
                let open = stack.pop().ok_or_else(|| WireError::malformed("unbalanced end tag"))?;
                let mut element = open.element;
                if !element.children.is_empty() {
                    if open.has_content_text {
                        return Err(WireError::invalid(format!(
                            "<{}> mixes text and elements",
                            element.local
                        )));
                    }
                    element.text.clear();
                }
                match stack.last_mut() {
                    Some(parent) => parent.element.children.push(element),
                    None => root = Some(element),
                }
            }
            Event::Text(t) => {
                let content = t.xml10_content().map_err(|e| WireError::malformed(e.to_string()))?;
                append_text(&mut stack, &content)?;
            }
            Event::CData(c) => {
                let content = c.xml10_content().map_err(|e| WireError::malformed(e.to_string()))?;
                if stack.is_empty() {
                    return Err(WireError::malformed("CDATA outside the document element"));
                }
                append_text(&mut stack, &content)?;
            }
            Event::GeneralRef(r) => {
                let ch = match r.resolve_char_ref().map_err(|e| WireError::malformed(e.to_string()))? {
                    Some(ch) => ch,
                    None => match r.as_ref() {
                        b"amp" => '&',
                        b"lt" => '<',
                        b"gt" => '>',
                        b"quot" => '"',
                        b"apos" => '\'',
                        other => {
                            return Err(WireError::malformed(format!(
                                "undefined entity &{};",
                                String::from_utf8_lossy(other)
                            )))
                        }
                    },
                };
                if !is_xml_char(ch) {
                    return Err(WireError::malformed(format!("character reference to U+{:04X}", ch as u32)));
                }
                if stack.is_empty() {
                    return Err(WireError::malformed("reference outside the document element"));
                }
                let mut buf = [0u8; 4];
                append_text(&mut stack, ch.encode_utf8(&mut buf))?;
            }
            Event::Decl(_) => {
                if seen_markup {
                    return Err(WireError::malformed("XML declaration must come first"));
                }
                seen_markup = true;
            }
            Event::DocType(_) => return Err(WireError::invalid("DOCTYPE is not supported")),
            Event::Comment(_) | Event::PI(_) => seen_markup = true,
            Event::Empty(_) => unreachable!("empty elements are expanded"),
            Event::Eof => break,
        }
    }

    if !stack.is_empty() {
        return Err(WireError::malformed("unexpected end of document"));
    }
    root.ok_or_else(|| WireError::malformed("no document element"))
}

fn append_text(stack: &mut [Open], content: &str) -> Result<(), WireError> {
    if let Some(bad) = content.chars().find(|c| !is_xml_char(*c)) {
        return Err(WireError::malformed(format!("illegal character U+{:04X}", bad as u32)));
    }
    match stack.last_mut() {
        Some(open) => {
            if !content.chars().all(is_xml_space) {
                open.has_content_text = true;
            }
            open.element.text.push_str(content);
            Ok(())
        }
        None if content.chars().all(is_xml_space) => Ok(()),
        None => Err(WireError::malformed("text outside the document element")),
    }
}

fn is_xml_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r')
}

/// The XML 1.0 `Char` production.
pub(crate) fn is_xml_char(c: char) -> bool {
    matches!(c,
        '\u{9}' | '\u{A}' | '\u{D}'
        | '\u{20}'..='\u{D7FF}'
        | '\u{E000}'..='\u{FFFD}'
        | '\u{10000}'..='\u{10FFFF}')
}

pub(crate) fn escape_into(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}
