//! Text form of byte-level tokens.
//!
//! Printable ASCII other than space and backslash is written literally; a
//! backslash is doubled; every other byte becomes `\xHH`. The result never
//! contains whitespace, so escaped tokens can be joined with spaces or tabs.

use crate::error::{Error, Result};

pub fn escape(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for &b in bytes {
        match b {
            b'\\' => out.push_str("\\\\"),
            0x21..=0x7E => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02X}")),
        }
    }
    out
}

/// Inverse of [`escape`]. Literal non-ASCII characters are accepted and
/// contribute their UTF-8 bytes, which keeps hand-written files readable.
pub fn unescape(text: &str) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'\\' {
            out.push(bytes[i]);
            i += 1;
            continue;
        }
        match bytes.get(i + 1) {
            Some(b'\\') => {
                out.push(b'\\');
                i += 2;
            }
            Some(b'x') => {
                let hex = text
                    .get(i + 2..i + 4)
                    .ok_or_else(|| bad_escape(text))?;
                let b = u8::from_str_radix(hex, 16).map_err(|_| bad_escape(text))?;
                out.push(b);
                i += 4;
            }
            _ => return Err(bad_escape(text)),
        }
    }
    Ok(out)
}

fn bad_escape(text: &str) -> Error {
    Error::InvalidInput(format!("bad escape sequence in `{text}`"))
}
