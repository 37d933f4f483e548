//! Token table: salted SHA-256 fingerprints of issued tokens, one active token
//! per mother. Raw tokens are never stored.
//!
//! File layout:
//!
//! ```text
//! #SALT <32 hex digits>
//! <64 hex digits><TAB><mother_id>
//! ```

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use rand::RngCore;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use crate::error::StoreError;

pub const TOKEN_PREFIX: &str = "TK-";
const TOKEN_BYTES: usize = 18;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    fingerprint: [u8; 32],
    mother_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMatch {
    pub mother_id: String,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTable {
    salt: [u8; 16],
    entries: Vec<Entry>,
}

impl Default for TokenTable {
    fn default() -> Self {
        Self::new()
    }
}

impl TokenTable {
    /// Empty table with a fresh random salt.
    pub fn new() -> Self {
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        Self::with_salt(salt)
    }

    pub fn with_salt(salt: [u8; 16]) -> Self {
        TokenTable { salt, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn digest(&self, token: &str) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.salt);
        h.update(token.as_bytes());
        h.finalize().into()
    }

    /// Hex fingerprint of a presented token under this table's salt.
    pub fn fingerprint(&self, token: &str) -> String {
        hex::encode(self.digest(token))
    }

    /// Registers `token` for `mother_id`, dropping any token she held before.
    pub fn install(&mut self, token: &str, mother_id: &str) {
        self.revoke(mother_id);
        let fingerprint = self.digest(token);
        self.entries.push(Entry { fingerprint, mother_id: mother_id.to_string() });
    }

    /// Generates a fresh random token for `mother_id` and returns it. The
    /// caller is the only holder of the raw value.
    pub fn issue(&mut self, mother_id: &str) -> String {
        let mut raw = [0u8; TOKEN_BYTES];
        rand::rng().fill_bytes(&mut raw);
        let token = format!("{TOKEN_PREFIX}{}", URL_SAFE_NO_PAD.encode(raw));
        self.install(&token, mother_id);
        token
    }

    pub fn revoke(&mut self, mother_id: &str) -> bool {
        let before = self.entries.len();
        self.entries.retain(|e| e.mother_id != mother_id);
        before != self.entries.len()
    }

    pub fn mothers(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.mother_id.as_str())
    }

    /// Compares the presented token's fingerprint against every entry in
    /// constant time per entry, without early exit.
    pub fn verify(&self, token: &str) -> Option<TokenMatch> {
        let presented = self.digest(token);
        let mut found: Option<&Entry> = None;
        for entry in &self.entries {
            if bool::from(entry.fingerprint.ct_eq(&presented)) {
                found = Some(entry);
            }
        }
        found.map(|e| TokenMatch { mother_id: e.mother_id.clone(), fingerprint: hex::encode(presented) })
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("#SALT {}\n", hex::encode(self.salt));
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\n", hex::encode(e.fingerprint), e.mother_id));
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, StoreError> {
        let bad = |line: usize, reason: &str| StoreError::TokenFile {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty token table"))?;
        let salt_hex = header.strip_prefix("#SALT ").ok_or_else(|| bad(1, "missing #SALT header"))?;
        let salt: [u8; 16] = hex::decode(salt_hex.trim())
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or_else(|| bad(1, "salt must be 16 hex-encoded bytes"))?;
        let mut table = TokenTable::with_salt(salt);
        for (idx, line) in lines {
            let (hash, mother_id) =
                line.split_once('\t').ok_or_else(|| bad(idx + 1, "expected <hash>\\t<mother_id>"))?;
            let fingerprint: [u8; 32] = hex::decode(hash)
                .ok()
                .and_then(|v| v.try_into().ok())
                .ok_or_else(|| bad(idx + 1, "fingerprint must be 32 hex-encoded bytes"))?;
            let mother_id = mother_id.trim().to_string();
            if table.entries.iter().any(|e| e.mother_id == mother_id) {
                return Err(bad(idx + 1, "second token for the same mother"));
            }
            table.entries.push(Entry { fingerprint, mother_id });
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path)
            .map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    /// Atomically replaces the file at `path`; owner-only permissions on Unix.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        crate::datadir::write_atomic(path, self.to_file_string().as_bytes(), true)
    }
}
