//! Parity-aware merge selection: per-language compression bookkeeping,
//! moving-window balancing and the training entry points.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Trainer, Training};
use crate::corpus::{pretokens, LabeledCorpus, LanguageId, NormUnit, ParallelDevCorpus};
use crate::error::{Error, Result};
use crate::tokenizer::TokenizerModel;

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_ALPHA: f64 = 2.0;
/// Fraction of the budget learned with global counts in the hybrid variant.
pub const DEFAULT_HYBRID_SPLIT: f64 = 0.5;

/// Where per-language compression rates are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DevSource {
    /// A separate line-aligned dev corpus.
    #[default]
    ParallelDev,
    /// The training shards themselves, measured in bytes.
    TrainingAsDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityConfig {
    pub total_merges: usize,
    /// Leading merges chosen from global counts (hybrid prelude).
    pub hybrid_global_merges: usize,
    /// Selection window length; 0 disables balancing.
    pub window_size: usize,
    pub alpha: f64,
    pub unit: NormUnit,
    pub dev_source: DevSource,
}

impl ParityConfig {
    /// Plain parity-aware BPE: no prelude, no window, lines on a parallel
    /// dev corpus.
    pub fn new(total_merges: usize) -> Self {
        ParityConfig {
            total_merges,
            hybrid_global_merges: 0,
            window_size: 0,
            alpha: DEFAULT_ALPHA,
            unit: NormUnit::Lines,
            dev_source: DevSource::ParallelDev,
        }
    }

    /// Every merge from global counts.
    pub fn classical(total_merges: usize) -> Self {
        ParityConfig {
            hybrid_global_merges: total_merges,
            ..Self::new(total_merges)
        }
    }

    /// Window of 100 with alpha 2, half the budget global.
    pub fn window_hybrid(total_merges: usize) -> Self {
        Self::new(total_merges)
            .with_window(DEFAULT_WINDOW, DEFAULT_ALPHA)
            .with_hybrid_split(DEFAULT_HYBRID_SPLIT)
    }

    pub fn with_window(mut self, window_size: usize, alpha: f64) -> Self {
        self.window_size = window_size;
        self.alpha = alpha;
        self
    }

    /// Sets the prelude to `floor(split * total_merges)` merges.
    pub fn with_hybrid_split(mut self, split: f64) -> Self {
        self.hybrid_global_merges = (split.clamp(0.0, 1.0) * self.total_merges as f64).floor() as usize;
        self
    }

    /// Measure compression on the training shards; forces bytes.
    pub fn training_as_dev(mut self) -> Self {
        self.dev_source = DevSource::TrainingAsDev;
        self.unit = NormUnit::Bytes;
        self
    }

    pub fn parity_merges(&self) -> usize {
        self.total_merges.saturating_sub(self.hybrid_global_merges)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hybrid_global_merges > self.total_merges {
            return Err(Error::InvalidConfig(format!(
                "hybrid prelude ({}) exceeds total merges ({})",
                self.hybrid_global_merges, self.total_merges
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.dev_source == DevSource::TrainingAsDev && self.unit != NormUnit::Bytes {
            return Err(Error::InvalidConfig(
                "training_as_dev measures compression in bytes".into(),
            ));
        }
        Ok(())
    }
}

/// Per-language unit and token totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrEntry {
    pub lang: LanguageId,
    pub unit_total: u64,
    pub token_total: u64,
}

impl CrEntry {
    pub fn cr(&self) -> f64 {
        self.unit_total as f64 / self.token_total as f64
    }
}

/// Ratio-of-sums compression rate of every language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrTable {
    pub unit: NormUnit,
    pub entries: Vec<CrEntry>,
}

impl CrTable {
    /// Encodes every dev line with `model` from scratch.
    pub fn compute_parallel(
        dev: &ParallelDevCorpus,
        model: &TokenizerModel,
        unit: NormUnit,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (lang, lines) in dev.iter() {
            let mut unit_total = 0;
            let mut token_total = 0;
            for line in lines {
                unit_total += crate::corpus::unit_length(line, unit).count;
                token_total += model.token_count(line) as u64;
            }
            if unit_total == 0 {
                return Err(Error::InvalidInput(format!(
                    "`{lang}` has zero length in {unit}"
                )));
            }
            entries.push(CrEntry {
                lang: lang.clone(),
                unit_total,
                token_total,
            });
        }
        Ok(CrTable { unit, entries })
    }

    /// Byte-unit table over the training shards.
    pub fn compute_training(corpus: &LabeledCorpus, model: &TokenizerModel) -> Result<Self> {
        let mut entries = Vec::new();
        for (lang, words) in &corpus.per_language {
            let mut unit_total = 0;
            let mut token_total = 0;
            let mut scratch = Vec::new();
            for (w, c) in words.iter() {
                unit_total += w.len() as u64 * c;
                for p in pretokens(w) {
                    scratch.clear();
                    model.encode_pretoken(p, &mut scratch);
                    token_total += scratch.len() as u64 * c;
                }
            }
            if unit_total == 0 {
                return Err(Error::EmptyPartition(lang.to_string()));
            }
            entries.push(CrEntry {
                lang: lang.clone(),
                unit_total,
                token_total,
            });
        }
        Ok(CrTable {
            unit: NormUnit::Bytes,
            entries,
        })
    }

    pub fn get(&self, lang: &LanguageId) -> Option<&CrEntry> {
        self.entries.iter().find(|e| &e.lang == lang)
    }

    pub fn snapshot(&self) -> BTreeMap<String, f64> {
        self.entries
            .iter()
            .map(|e| (e.lang.to_string(), e.cr()))
            .collect()
    }

    /// Exact comparison of two entries' rates, ties broken by language code.
    fn compare(&self, a: usize, b: usize) -> Ordering {
        let (x, y) = (&self.entries[a], &self.entries[b]);
        let lhs = u128::from(x.unit_total) * u128::from(y.token_total);
        let rhs = u128::from(y.unit_total) * u128::from(x.token_total);
        lhs.cmp(&rhs).then_with(|| x.lang.cmp(&y.lang))
    }
}

/// The most recent language selections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionWindow {
    capacity: usize,
    recent: VecDeque<LanguageId>,
}

impl SelectionWindow {
    pub fn new(capacity: usize) -> Self {
        SelectionWindow {
            capacity,
            recent: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }

    pub fn push(&mut self, lang: LanguageId) {
        if self.capacity == 0 {
            return;
        }
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(lang);
    }

    /// Whether selecting `lang` now keeps its count within the last
    /// `capacity` selections (this one included) at or below
    /// `alpha * capacity / n_langs`.
    pub fn admits(&self, lang: &LanguageId, n_langs: usize, alpha: f64) -> bool {
        if self.capacity == 0 {
            return true;
        }
        let prior = self
            .recent
            .iter()
            .rev()
            .take(self.capacity - 1)
            .filter(|l| *l == lang)
            .count() as u64;
        within_quota(prior + 1, n_langs as u64, alpha, self.capacity as u64)
    }
}

/// `count <= alpha * window / n_langs`, evaluated exactly by expanding
/// `alpha` into `mantissa * 2^exp`.
pub(crate) fn within_quota(count: u64, n_langs: u64, alpha: f64, window: u64) -> bool {
    let (mantissa, exp) = decompose(alpha);
    // count * n_langs <= mantissa * window * 2^exp
    let lhs = u128::from(count) * u128::from(n_langs);
    let rhs = u128::from(mantissa) * u128::from(window);
    if exp >= 0 {
        match rhs.checked_shl(exp as u32).filter(|v| v >> exp == rhs) {
            Some(r) => lhs <= r,
            None => true,
        }
    } else {
        match lhs.checked_shl((-exp) as u32).filter(|v| v >> (-exp) == lhs) {
            Some(l) => l <= rhs,
            None => lhs == 0,
        }
    }
}

/// Finite positive `x` as `m * 2^e` with integer `m`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exponent - 1075)
    }
}

/// A candidate language in selection order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageChoice {
    /// Index into the table's entries.
    pub index: usize,
    /// Chosen although the window quota excludes it.
    pub fallback: bool,
}

/// Every table language in the order it would be tried: languages the
/// window admits by ascending compression rate, then the excluded ones
/// (flagged as fallback) in the same order.
pub fn candidate_order(table: &CrTable, window: &SelectionWindow, alpha: f64) -> Vec<LanguageChoice> {
    let mut idx: Vec<usize> = (0..table.entries.len()).collect();
    idx.sort_by(|&a, &b| table.compare(a, b));
    let n = table.entries.len();
    let (admitted, excluded): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| window.admits(&table.entries[i].lang, n, alpha));
    admitted
        .into_iter()
        .map(|index| LanguageChoice {
            index,
            fallback: false,
        })
        .chain(excluded.into_iter().map(|index| LanguageChoice {
            index,
            fallback: true,
        }))
        .collect()
}

/// Language with the lowest compression rate among those the window admits.
pub fn select_language(table: &CrTable, window: &SelectionWindow, alpha: f64) -> Option<LanguageChoice> {
    candidate_order(table, window, alpha).into_iter().next()
}

/// Trains with the given configuration. `dev` is ignored when the config
/// measures compression on the training data.
pub fn train_parity(
    train: &LabeledCorpus,
    dev: Option<&ParallelDevCorpus>,
    config: &ParityConfig,
) -> Result<Training> {
    let dev = match config.dev_source {
        DevSource::ParallelDev => dev,
        DevSource::TrainingAsDev => None,
    };
    Trainer::new(train, dev, config.clone())?.run()
}

/// Parity training with compression measured in bytes on the training
/// shards.
pub fn train_no_dev(train: &LabeledCorpus, config: &ParityConfig) -> Result<Training> {
    let config = config.clone().training_as_dev();
    Trainer::new(train, None, config)?.run()
}
