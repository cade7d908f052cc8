//! Whitespace pre-tokenization over raw bytes.
//!
//! Each run of whitespace is attached to the front of the pre-token that
//! follows it, so `"ab  cd"` becomes `["ab", "  cd"]`. A whitespace run at the
//! end of the input becomes a pre-token of its own. Concatenating the output
//! always restores the input byte-for-byte.

/// ASCII whitespace, including vertical tab.
#[inline]
pub fn is_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0B | 0x0C)
}

/// Iterator over the pre-tokens of a byte string.
#[derive(Debug, Clone)]
pub struct PreTokens<'a> {
    rest: &'a [u8],
}

impl<'a> Iterator for PreTokens<'a> {
    type Item = &'a [u8];

    fn next(&mut self) -> Option<&'a [u8]> {
        if self.rest.is_empty() {
            return None;
        }
        let ws = self.rest.iter().take_while(|&&b| is_whitespace(b)).count();
        let body = self.rest[ws..]
            .iter()
            .take_while(|&&b| !is_whitespace(b))
            .count();
        let (head, tail) = self.rest.split_at(ws + body);
        self.rest = tail;
        Some(head)
    }
}

/// Splits `text` before every whitespace run.
pub fn pretokens(text: &[u8]) -> PreTokens<'_> {
    PreTokens { rest: text }
}

/// Collecting form of [`pretokens`].
pub fn pretokenize(text: &[u8]) -> Vec<&[u8]> {
    pretokens(text).collect()
}

/// Number of whitespace-delimited words, i.e. pre-tokens that carry at least
/// one non-whitespace byte.
pub fn word_count(text: &[u8]) -> u64 {
    pretokens(text).filter(|p| is_word(p)).count() as u64
}

/// True when the pre-token is not pure whitespace.
#[inline]
pub fn is_word(pretoken: &[u8]) -> bool {
    pretoken.iter().any(|&b| !is_whitespace(b))
}
