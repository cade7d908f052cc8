//! Merge-list tokenizer: vocabulary, encoding, decoding and the model file.
//!
//! Token ids follow model order: `0..=255` are the singleton bytes and merge
//! `k` (zero-based) owns id `256 + k`. When two merges produce the same byte
//! string the later id is an alias; encoding always reports the first
//! (canonical) id for a byte string, decoding accepts either.

mod escape;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::pretokens;
use crate::error::{Error, Result};

pub use escape::{escape, unescape};

pub type TokenId = u32;

/// First line of a model file.
pub const MODEL_HEADER: &str = "parity-bpe v1";
const MERGES_SECTION: &str = "merges:";
const NONE: usize = usize::MAX;

/// A vocabulary entry: a non-empty byte span.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(pub Vec<u8>);

impl Token {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&escape(&self.0))
    }
}

impl From<&[u8]> for Token {
    fn from(b: &[u8]) -> Self {
        Token(b.to_vec())
    }
}

impl From<&str> for Token {
    fn from(s: &str) -> Self {
        Token(s.as_bytes().to_vec())
    }
}

/// One learned merge, by byte content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge<'a> {
    pub left: &'a [u8],
    pub right: &'a [u8],
}

/// Vocabulary plus ordered merge list.
#[derive(Debug, Clone, Default)]
pub struct TokenizerModel {
    /// Canonical operand ids of every merge, in training order.
    merges: Vec<(TokenId, TokenId)>,
    /// Canonical id of each merge's result.
    results: Vec<TokenId>,
    /// Bytes of every id, aliases included.
    id_bytes: Vec<Vec<u8>>,
    canonical: HashMap<Vec<u8>, TokenId>,
    rank: HashMap<(TokenId, TokenId), u32>,
}

impl PartialEq for TokenizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges && self.id_bytes == other.id_bytes
    }
}

impl Eq for TokenizerModel {}

impl TokenizerModel {
    /// The 256-token byte tokenizer with no merges.
    pub fn identity() -> Self {
        let id_bytes: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let canonical = id_bytes
            .iter()
            .enumerate()
            .map(|(i, b)| (b.clone(), i as TokenId))
            .collect();
        TokenizerModel {
            merges: Vec::new(),
            results: Vec::new(),
            id_bytes,
            canonical,
            rank: HashMap::new(),
        }
    }

    /// Builds a model from merges given by content. Every operand must be a
    /// single byte or the result of an earlier merge.
    pub fn from_merges<L, R>(merges: impl IntoIterator<Item = (L, R)>) -> Result<Self>
    where
        L: AsRef<[u8]>,
        R: AsRef<[u8]>,
    {
        let mut model = Self::identity();
        for (k, (l, r)) in merges.into_iter().enumerate() {
            let (l, r) = (l.as_ref(), r.as_ref());
            let lid = model.id_of(l).ok_or_else(|| unproducible(k, l))?;
            let rid = model.id_of(r).ok_or_else(|| unproducible(k, r))?;
            model.push_merge(lid, rid)?;
        }
        Ok(model)
    }

    /// Appends merge `(left, right)` and returns the canonical id of its
    /// result.
    pub fn push_merge(&mut self, left: TokenId, right: TokenId) -> Result<TokenId> {
        let (Some(l), Some(r)) = (self.canonical_bytes(left), self.canonical_bytes(right)) else {
            return Err(Error::Invariant(format!(
                "merge operand id out of range ({left}, {right})"
            )));
        };
        let (left, right) = (self.canonical[l], self.canonical[r]);
        if self.rank.contains_key(&(left, right)) {
            return Err(Error::InvalidInput(format!(
                "duplicate merge ({}, {})",
                escape(l),
                escape(r)
            )));
        }
        let mut joined = Vec::with_capacity(l.len() + r.len());
        joined.extend_from_slice(l);
        joined.extend_from_slice(r);

        let new_id = self.id_bytes.len() as TokenId;
        let result = *self.canonical.entry(joined.clone()).or_insert(new_id);
        self.id_bytes.push(joined);
        self.rank.insert((left, right), self.merges.len() as u32);
        self.merges.push((left, right));
        self.results.push(result);
        Ok(result)
    }

    fn canonical_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.id_bytes.get(id as usize).map(Vec::as_slice)
    }

    /// Model restricted to its first `k` merges.
    pub fn prefix(&self, k: usize) -> TokenizerModel {
        let mut model = Self::identity();
        for &(l, r) in self.merges.iter().take(k) {
            model
                .push_merge(l, r)
                .expect("a prefix of a valid merge list is valid");
        }
        model
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    /// Number of distinct byte strings in the vocabulary.
    pub fn vocab_size(&self) -> usize {
        self.canonical.len()
    }

    /// Number of token ids, aliases included (`256 + merges`).
    pub fn id_count(&self) -> usize {
        self.id_bytes.len()
    }

    pub fn id_of(&self, bytes: &[u8]) -> Option<TokenId> {
        self.canonical.get(bytes).copied()
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.canonical_bytes(id)
    }

    /// Rank of the merge `(left, right)`, if learned.
    pub fn merge_rank(&self, left: TokenId, right: TokenId) -> Option<u32> {
        self.rank.get(&(left, right)).copied()
    }

    /// Canonical result id of merge `rank`.
    pub fn merge_result(&self, rank: usize) -> TokenId {
        self.results[rank]
    }

    pub fn merge_ids(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn merges(&self) -> impl Iterator<Item = Merge<'_>> + '_ {
        self.merges.iter().map(|&(l, r)| Merge {
            left: &self.id_bytes[l as usize],
            right: &self.id_bytes[r as usize],
        })
    }

    /// Canonical ids of the vocabulary in model order.
    pub fn vocabulary(&self) -> impl Iterator<Item = (TokenId, &[u8])> + '_ {
        self.id_bytes
            .iter()
            .enumerate()
            .filter(|(i, b)| self.canonical[b.as_slice()] == *i as TokenId)
            .map(|(i, b)| (i as TokenId, b.as_slice()))
    }

    /// Encodes `text` to canonical token ids.
    pub fn encode_ids(&self, text: &[u8]) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(text.len());
        for p in pretokens(text) {
            self.encode_pretoken(p, &mut out);
        }
        out
    }

    pub fn encode(&self, text: &[u8]) -> Vec<Token> {
        self.encode_ids(text)
            .into_iter()
            .map(|id| Token(self.id_bytes[id as usize].clone()))
            .collect()
    }

    /// Number of tokens `encode` would produce.
    pub fn token_count(&self, text: &[u8]) -> usize {
        let mut scratch = Vec::new();
        let mut n = 0;
        for p in pretokens(text) {
            scratch.clear();
            self.encode_pretoken(p, &mut scratch);
            n += scratch.len();
        }
        n
    }

    /// Applies merges within one pre-token, in rank order.
    ///
    /// Occurrences sit in a min-heap keyed by `(rank, position)`. Once a merge
    /// of rank `r` fires, lower ranks are never applied again, which keeps the
    /// result identical to replaying the merge list front to back even when
    /// two merges share a result.
    pub fn encode_pretoken(&self, bytes: &[u8], out: &mut Vec<TokenId>) {
        match bytes.len() {
            0 => return,
            1 => {
                out.push(bytes[0] as TokenId);
                return;
            }
            _ => {}
        }
        let n = bytes.len();
        let mut ids: Vec<TokenId> = bytes.iter().map(|&b| b as TokenId).collect();
        let mut next: Vec<usize> = (1..=n).map(|i| if i == n { NONE } else { i }).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
        let mut alive = vec![true; n];

        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(r) = self.merge_rank(ids[i], ids[i + 1]) {
                heap.push(Reverse((r, i)));
            }
        }

        let mut floor = 0u32;
        while let Some(Reverse((r, i))) = heap.pop() {
            if r < floor || !alive[i] {
                continue;
            }
            let j = next[i];
            if j == NONE || self.merge_rank(ids[i], ids[j]) != Some(r) {
                continue;
            }
            floor = r;
            ids[i] = self.results[r as usize];
            alive[j] = false;
            next[i] = next[j];
            if next[j] != NONE {
                prev[next[j]] = i;
            }
            if prev[i] != NONE {
                if let Some(r2) = self.merge_rank(ids[prev[i]], ids[i]) {
                    heap.push(Reverse((r2, prev[i])));
                }
            }
            if next[i] != NONE {
                if let Some(r2) = self.merge_rank(ids[i], ids[next[i]]) {
                    heap.push(Reverse((r2, i)));
                }
            }
        }

        let mut i = 0;
        while i != NONE {
            out.push(ids[i]);
            i = next[i];
        }
    }

    /// Concatenates token spans; every token must be in the vocabulary.
    pub fn decode(&self, tokens: &[Token]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for t in tokens {
            if !self.canonical.contains_key(&t.0) {
                return Err(Error::UnknownToken(escape(&t.0)));
            }
            out.extend_from_slice(&t.0);
        }
        Ok(out)
    }

    pub fn decode_ids(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            let b = self
                .id_bytes
                .get(id as usize)
                .ok_or(Error::UnknownTokenId(u64::from(id)))?;
            out.extend_from_slice(b);
        }
        Ok(out)
    }

    /// Serialized model text.
    pub fn to_model_string(&self) -> String {
        let mut s = String::new();
        s.push_str(MODEL_HEADER);
        s.push('\n');
        s.push_str(MERGES_SECTION);
        s.push('\n');
        for m in self.merges() {
            s.push_str(&escape(m.left));
            s.push('\t');
            s.push_str(&escape(m.right));
            s.push('\n');
        }
        s
    }

    pub fn from_model_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l.trim_end()).unwrap_or("");
        if header != MODEL_HEADER {
            return Err(Error::VersionMismatch {
                expected: MODEL_HEADER.into(),
                found: header.into(),
            });
        }
        match lines.next() {
            Some((_, l)) if l.trim_end() == MERGES_SECTION => {}
            _ => {
                return Err(Error::ModelFormat {
                    line: 2,
                    message: format!("expected `{MERGES_SECTION}`"),
                })
            }
        }

        let mut model = Self::identity();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| Error::ModelFormat {
                line: line_no,
                message,
            };
            let mut fields = line.split('\t');
            let (Some(l), Some(r), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(fail("expected `<left>\\t<right>`".into()));
            };
            let l = unescape(l).map_err(|e| fail(e.to_string()))?;
            let r = unescape(r).map_err(|e| fail(e.to_string()))?;
            if l.is_empty() || r.is_empty() {
                return Err(fail("empty token".into()));
            }
            let lid = model
                .id_of(&l)
                .ok_or_else(|| fail(format!("unknown token `{}`", escape(&l))))?;
            let rid = model
                .id_of(&r)
                .ok_or_else(|| fail(format!("unknown token `{}`", escape(&r))))?;
            model
                .push_merge(lid, rid)
                .map_err(|e| fail(e.to_string()))?;
        }
        Ok(model)
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_model_string().as_bytes()))
    }
}

fn unproducible(k: usize, token: &[u8]) -> Error {
    Error::ModelFormat {
        line: k + 3,
        message: format!("unknown token `{}`", escape(token)),
    }
}

pub fn save_model(model: &TokenizerModel, path: &Path) -> Result<()> {
    fs::write(path, model.to_model_string()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TokenizerModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TokenizerModel::from_model_str(&text)
}
