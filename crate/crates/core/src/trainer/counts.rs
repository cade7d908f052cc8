//! Adjacent-pair counts with a lazily invalidated max-heap.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::tokenizer::{TokenId, TokenizerModel};

pub type Pair = (TokenId, TokenId);

/// Occurrence counts of adjacent token pairs, weighted by word multiplicity.
///
/// The heap may hold stale entries; an entry is live only while its count
/// equals the current count of its pair.
#[derive(Debug, Clone, Default)]
pub struct PairCounts {
    counts: HashMap<Pair, u64>,
    heap: BinaryHeap<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Vec<u8>,
    right: Vec<u8>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // higher count first, then lexicographically smaller bytes
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PairCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every adjacent position of every word from scratch.
    pub fn recount<'a, I>(words: I, vocab: &TokenizerModel) -> Self
    where
        I: IntoIterator<Item = (&'a [TokenId], u64)>,
    {
        let mut counts: HashMap<Pair, u64> = HashMap::new();
        for (tokens, count) in words {
            for w in tokens.windows(2) {
                *counts.entry((w[0], w[1])).or_insert(0) += count;
            }
        }
        let mut pc = PairCounts {
            counts,
            heap: BinaryHeap::new(),
        };
        pc.rebuild_heap(vocab);
        pc
    }

    pub fn get(&self, pair: Pair) -> u64 {
        self.counts.get(&pair).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_map(&self) -> &HashMap<Pair, u64> {
        &self.counts
    }

    /// Adds `delta` to the count of `pair`.
    pub fn apply_delta(&mut self, pair: Pair, delta: i64, vocab: &TokenizerModel) {
        if delta == 0 {
            return;
        }
        let current = self.get(pair) as i64;
        let updated = current + delta;
        assert!(updated >= 0, "pair count went negative for {pair:?}");
        if updated == 0 {
            self.counts.remove(&pair);
        } else {
            self.counts.insert(pair, updated as u64);
            self.push(pair, updated as u64, vocab);
        }
        if self.heap.len() > 4 * self.counts.len() + 4096 {
            self.rebuild_heap(vocab);
        }
    }

    /// Pair with the highest count, ties going to the lexicographically
    /// smallest `(left bytes, right bytes)`; `None` if no pair reaches
    /// `min_count`.
    pub fn best(&mut self, min_count: u64) -> Option<(Pair, u64)> {
        while let Some(top) = self.heap.peek() {
            if self.counts.get(&top.pair) != Some(&top.count) {
                self.heap.pop();
                continue;
            }
            return (top.count >= min_count).then_some((top.pair, top.count));
        }
        None
    }

    /// Like [`best`](Self::best) but skips pairs that already have a merge
    /// rank in `model`. Such pairs can reappear when two merges produce the
    /// same bytes; replaying the merge list never applies them twice.
    pub fn best_eligible(&mut self, min_count: u64, model: &TokenizerModel) -> Option<(Pair, u64)> {
        loop {
            let (pair, count) = self.best(min_count)?;
            if model.merge_rank(pair.0, pair.1).is_none() {
                return Some((pair, count));
            }
            self.heap.pop();
        }
    }

    fn push(&mut self, pair: Pair, count: u64, vocab: &TokenizerModel) {
        let bytes = |id| vocab.token_bytes(id).unwrap_or_default().to_vec();
        self.heap.push(Candidate {
            count,
            left: bytes(pair.0),
            right: bytes(pair.1),
            pair,
        });
    }

    fn rebuild_heap(&mut self, vocab: &TokenizerModel) {
        self.heap.clear();
        let entries: Vec<(Pair, u64)> = self.counts.iter().map(|(p, c)| (*p, *c)).collect();
        for (pair, count) in entries {
            self.push(pair, count, vocab);
        }
    }
}

impl PartialEq for PairCounts {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts
    }
}

/// Max-count pair by exhaustive scan, with the same tie-break as
/// [`PairCounts::best`].
pub fn select_merge(
    counts: &HashMap<Pair, u64>,
    vocab: &TokenizerModel,
    min_count: u64,
) -> Option<(Pair, u64)> {
    let key = |p: &Pair| {
        (
            vocab.token_bytes(p.0).unwrap_or_default(),
            vocab.token_bytes(p.1).unwrap_or_default(),
        )
    };
    counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| key(pb).cmp(&key(pa))))
        .map(|(p, c)| (*p, *c))
}
