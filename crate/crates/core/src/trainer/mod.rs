//! Greedy merge learning.
//!
//! [`Trainer`] runs both algorithms. A classical run takes every merge from
//! the global pair counts. A parity run picks, at each step, the language
//! with the lowest compression rate and takes the most frequent pair from
//! that language's shard only; the chosen merge is then applied to every
//! language's training words and to the dev corpus. The hybrid variant runs
//! classical steps first and parity steps after.

mod classical;
mod counts;
mod parity;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{pretokens, LabeledCorpus, LanguageId, NormUnit, ParallelDevCorpus, WordMultiset};
use crate::error::{Error, Result};
use crate::tokenizer::{escape, unescape, TokenId, TokenizerModel};

pub use classical::train_classical;
pub use counts::{select_merge, Pair, PairCounts};
pub use parity::{
    candidate_order, select_language, train_no_dev, train_parity, CrEntry, CrTable, DevSource,
    LanguageChoice, ParityConfig, SelectionWindow, DEFAULT_ALPHA, DEFAULT_HYBRID_SPLIT,
    DEFAULT_WINDOW,
};

/// Pairs seen fewer times than this are never merged.
pub const MIN_PAIR_COUNT: u64 = 2;

/// A pre-token in its current segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedWord {
    pub tokens: Vec<TokenId>,
    pub count: u64,
    /// Index into [`TrainerState::languages`].
    pub lang: usize,
}

/// Replaces non-overlapping occurrences of `pair`, scanning left to right.
/// Returns `None` when the pair does not occur.
pub fn merge_tokens(tokens: &[TokenId], pair: Pair, result: TokenId) -> Option<Vec<TokenId>> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    let mut hit = false;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i] == pair.0 && tokens[i + 1] == pair.1 {
            out.push(result);
            i += 2;
            hit = true;
        } else {
            out.push(tokens[i]);
            i += 1;
        }
    }
    hit.then_some(out)
}

/// Words of one corpus side with a pair → word index.
#[derive(Debug, Clone, Default)]
pub(crate) struct WordTable {
    words: Vec<TokenizedWord>,
    /// Words that contain (or once contained) each pair.
    index: HashMap<Pair, Vec<u32>>,
    token_totals: Vec<u64>,
}

impl WordTable {
    fn new(n_langs: usize) -> Self {
        WordTable {
            words: Vec::new(),
            index: HashMap::new(),
            token_totals: vec![0; n_langs],
        }
    }

    fn add_multiset(&mut self, lang: usize, words: &WordMultiset) {
        for (bytes, count) in words.iter() {
            let tokens: Vec<TokenId> = bytes.iter().map(|&b| b as TokenId).collect();
            let id = self.words.len() as u32;
            for w in tokens.windows(2) {
                self.index.entry((w[0], w[1])).or_default().push(id);
            }
            self.token_totals[lang] += tokens.len() as u64 * count;
            self.words.push(TokenizedWord {
                tokens,
                count,
                lang,
            });
        }
    }

    /// Applies one merge. Per-language pair count changes are accumulated
    /// into `deltas` when given. Returns the number of replacements per
    /// language, weighted by word multiplicity.
    fn apply_merge(
        &mut self,
        pair: Pair,
        result: TokenId,
        mut deltas: Option<&mut [HashMap<Pair, i64>]>,
    ) -> Vec<u64> {
        let mut replaced = vec![0u64; self.token_totals.len()];
        let Some(mut ids) = self.index.remove(&pair) else {
            return replaced;
        };
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let word = &mut self.words[id as usize];
            let Some(merged) = merge_tokens(&word.tokens, pair, result) else {
                continue;
            };
            let count = word.count;
            let lang = word.lang;
            let n = (word.tokens.len() - merged.len()) as u64;
            replaced[lang] += n * count;
            self.token_totals[lang] -= n * count;

            if let Some(deltas) = deltas.as_deref_mut() {
                let d = &mut deltas[lang];
                for w in word.tokens.windows(2) {
                    *d.entry((w[0], w[1])).or_insert(0) -= count as i64;
                }
                for w in merged.windows(2) {
                    *d.entry((w[0], w[1])).or_insert(0) += count as i64;
                }
            }
            for w in merged.windows(2) {
                if w[0] == result || w[1] == result {
                    self.index.entry((w[0], w[1])).or_default().push(id);
                }
            }
            word.tokens = merged;
        }
        replaced
    }
}

/// Working state of a training run.
#[derive(Debug, Clone)]
pub struct TrainerState {
    model: TokenizerModel,
    languages: Vec<LanguageId>,
    train: WordTable,
    lang_counts: Vec<PairCounts>,
    global: PairCounts,
    dev: Option<DevTable>,
    byte_totals: Vec<u64>,
}

#[derive(Debug, Clone)]
struct DevTable {
    table: WordTable,
    /// Training-language index of each dev language, in dev order.
    langs: Vec<usize>,
    unit: NormUnit,
    unit_totals: Vec<u64>,
}

/// Outcome of [`TrainerState::apply_merge`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    Applied {
        result: TokenId,
        /// Replacements in the training words, per language.
        replacements: Vec<u64>,
    },
    /// The pair does not occur; nothing changed.
    Absent,
}

impl TrainerState {
    /// Splits every pre-token into single bytes and counts pairs.
    pub fn init(corpus: &LabeledCorpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let model = TokenizerModel::identity();
        let languages: Vec<LanguageId> = corpus.languages().cloned().collect();
        let mut train = WordTable::new(languages.len());
        for (i, lang) in languages.iter().enumerate() {
            train.add_multiset(i, &corpus.per_language[lang]);
        }
        let lang_counts: Vec<PairCounts> = (0..languages.len())
            .map(|i| {
                PairCounts::recount(
                    train
                        .words
                        .iter()
                        .filter(|w| w.lang == i)
                        .map(|w| (w.tokens.as_slice(), w.count)),
                    &model,
                )
            })
            .collect();
        let global = PairCounts::recount(
            train.words.iter().map(|w| (w.tokens.as_slice(), w.count)),
            &model,
        );
        let byte_totals = languages
            .iter()
            .map(|l| corpus.per_language[l].iter().map(|(w, c)| w.len() as u64 * c).sum())
            .collect();
        Ok(TrainerState {
            model,
            languages,
            train,
            lang_counts,
            global,
            dev: None,
            byte_totals,
        })
    }

    /// Attaches a parallel dev corpus whose token totals follow every merge.
    pub fn attach_dev(&mut self, dev: &ParallelDevCorpus, unit: NormUnit) -> Result<()> {
        let mut table = WordTable::new(self.languages.len());
        let mut langs = Vec::new();
        let mut unit_totals = Vec::new();
        for (lang, lines) in dev.iter() {
            let Some(idx) = self.languages.iter().position(|l| l == lang) else {
                return Err(Error::InvalidInput(format!(
                    "dev language `{lang}` has no training data"
                )));
            };
            let mut words = WordMultiset::new();
            let mut total = 0u64;
            for line in lines {
                for p in pretokens(line) {
                    words.add(p, 1);
                }
                total += crate::corpus::unit_length(line, unit).count;
            }
            if total == 0 {
                return Err(Error::InvalidInput(format!(
                    "dev language `{lang}` has zero length in {unit}"
                )));
            }
            table.add_multiset(idx, &words);
            langs.push(idx);
            unit_totals.push(total);
        }
        // replay merges learned so far
        for (rank, &pair) in self.model.merge_ids().iter().enumerate() {
            table.apply_merge(pair, self.model.merge_result(rank), None);
        }
        self.dev = Some(DevTable {
            table,
            langs,
            unit,
            unit_totals,
        });
        Ok(())
    }

    pub fn model(&self) -> &TokenizerModel {
        &self.model
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    pub fn words(&self) -> &[TokenizedWord] {
        &self.train.words
    }

    pub fn pair_counts(&self, lang: usize) -> &PairCounts {
        &self.lang_counts[lang]
    }

    pub fn global_counts(&self) -> &PairCounts {
        &self.global
    }

    /// Training token total per language.
    pub fn token_totals(&self) -> &[u64] {
        &self.train.token_totals
    }

    pub fn total_tokens(&self) -> u64 {
        self.train.token_totals.iter().sum()
    }

    /// Pair counts of one language recomputed from its words.
    pub fn recount(&self, lang: Option<usize>) -> PairCounts {
        PairCounts::recount(
            self.train
                .words
                .iter()
                .filter(|w| lang.is_none_or(|l| w.lang == l))
                .map(|w| (w.tokens.as_slice(), w.count)),
            &self.model,
        )
    }

    /// Compression table driving language selection: the dev corpus when one
    /// is attached, otherwise the training shards measured in bytes.
    pub fn cr_table(&self) -> CrTable {
        match &self.dev {
            Some(dev) => CrTable {
                unit: dev.unit,
                entries: dev
                    .langs
                    .iter()
                    .zip(&dev.unit_totals)
                    .map(|(&l, &u)| CrEntry {
                        lang: self.languages[l].clone(),
                        unit_total: u,
                        token_total: dev.table.token_totals[l],
                    })
                    .collect(),
            },
            None => CrTable {
                unit: NormUnit::Bytes,
                entries: self
                    .languages
                    .iter()
                    .enumerate()
                    .map(|(l, lang)| CrEntry {
                        lang: lang.clone(),
                        unit_total: self.byte_totals[l],
                        token_total: self.train.token_totals[l],
                    })
                    .collect(),
            },
        }
    }

    /// Appends `pair` to the merge list and rewrites every training word and
    /// dev word that contains it.
    pub fn apply_merge(&mut self, pair: Pair) -> Result<MergeOutcome> {
        if self.global.get(pair) == 0 {
            warn!("pair ({}, {}) does not occur, merge skipped", pair.0, pair.1);
            return Ok(MergeOutcome::Absent);
        }
        let result = self.model.push_merge(pair.0, pair.1)?;
        let mut deltas = vec![HashMap::new(); self.languages.len()];
        let replacements = self.train.apply_merge(pair, result, Some(&mut deltas));
        for (lang, d) in deltas.into_iter().enumerate() {
            let mut d: Vec<(Pair, i64)> = d.into_iter().filter(|(_, v)| *v != 0).collect();
            d.sort_unstable();
            for (p, v) in d {
                self.lang_counts[lang].apply_delta(p, v, &self.model);
                self.global.apply_delta(p, v, &self.model);
            }
        }
        if let Some(dev) = &mut self.dev {
            dev.table.apply_merge(pair, result, None);
        }
        Ok(MergeOutcome::Applied {
            result,
            replacements,
        })
    }
}

/// Why training ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopStatus {
    /// The merge budget was used up.
    Budget,
    /// No pair reached [`MIN_PAIR_COUNT`] before the budget was reached.
    Exhausted,
}

/// One learned merge as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based merge index.
    pub step: usize,
    #[serde(with = "escaped")]
    pub left: Vec<u8>,
    #[serde(with = "escaped")]
    pub right: Vec<u8>,
    /// Pair count in the counts the merge was selected from.
    pub count: u64,
    /// Selected language on parity steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    /// Compression rate per language before the merge, on parity steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cr_snapshot: Option<BTreeMap<String, f64>>,
    /// Selected despite exceeding the window quota.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
    /// Languages passed over because their shard had no eligible pair.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

mod escaped {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::escape(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::unescape(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub stop: StopStatus,
}

impl TrainLog {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Parses step records; the stop status is inferred from `budget`.
    pub fn from_jsonl(text: &str, budget: usize) -> Result<Self> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<StepRecord>, _>>()?;
        let stop = if steps.len() >= budget {
            StopStatus::Budget
        } else {
            StopStatus::Exhausted
        };
        Ok(TrainLog { steps, stop })
    }
}

/// Step-at-a-time driver shared by every training variant.
#[derive(Debug, Clone)]
pub struct Trainer {
    state: TrainerState,
    config: ParityConfig,
    window: SelectionWindow,
    steps: Vec<StepRecord>,
    stop: Option<StopStatus>,
}

impl Trainer {
    /// Classical BPE: every step uses the global counts.
    pub fn classical(corpus: &LabeledCorpus, merges: usize) -> Result<Self> {
        Self::new(corpus, None, ParityConfig::classical(merges))
    }

    /// Parity-aware run. `dev` is required unless the config measures
    /// compression on the training shards or has no parity steps.
    pub fn new(
        corpus: &LabeledCorpus,
        dev: Option<&ParallelDevCorpus>,
        config: ParityConfig,
    ) -> Result<Self> {
        config.validate()?;
        let mut state = TrainerState::init(corpus)?;
        match (config.dev_source, dev) {
            (DevSource::ParallelDev, Some(dev)) => state.attach_dev(dev, config.unit)?,
            (DevSource::ParallelDev, None) if config.parity_merges() > 0 => {
                return Err(Error::InvalidConfig(
                    "parity training needs a dev corpus (or training_as_dev)".into(),
                ))
            }
            _ => {}
        }
        Ok(Trainer {
            window: SelectionWindow::new(config.window_size),
            state,
            config,
            steps: Vec::new(),
            stop: None,
        })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn config(&self) -> &ParityConfig {
        &self.config
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn is_done(&self) -> bool {
        self.stop.is_some()
    }

    /// Learns one merge. Returns `false` once training has stopped.
    pub fn step(&mut self) -> Result<bool> {
        if self.stop.is_some() {
            return Ok(false);
        }
        let k = self.steps.len();
        if k >= self.config.total_merges {
            self.stop = Some(StopStatus::Budget);
            return Ok(false);
        }
        let record = if k < self.config.hybrid_global_merges {
            self.global_step(k)?
        } else {
            self.parity_step(k)?
        };
        match record {
            Some(r) => {
                self.steps.push(r);
                Ok(true)
            }
            None => {
                self.stop = Some(StopStatus::Exhausted);
                Ok(false)
            }
        }
    }

    fn global_step(&mut self, k: usize) -> Result<Option<StepRecord>> {
        let Some((pair, count)) = self.state.global.best_eligible(MIN_PAIR_COUNT, &self.state.model) else {
            return Ok(None);
        };
        self.state.apply_merge(pair)?;
        Ok(Some(self.record(k, pair, count)))
    }

    fn parity_step(&mut self, k: usize) -> Result<Option<StepRecord>> {
        let table = self.state.cr_table();
        let order = candidate_order(&table, &self.window, self.config.alpha);
        let mut skipped = Vec::new();
        for choice in order {
            let lang = &table.entries[choice.index].lang;
            let l = self
                .state
                .languages
                .iter()
                .position(|x| x == lang)
                .ok_or_else(|| Error::Invariant(format!("unknown language {lang}")))?;
            let Some((pair, count)) = self.state.lang_counts[l].best_eligible(MIN_PAIR_COUNT, &self.state.model) else {
                info!("step {}: `{lang}` has no pair occurring twice, skipped", k + 1);
                skipped.push(lang.to_string());
                continue;
            };
            if choice.fallback {
                info!("step {}: every language is over quota, `{lang}` chosen anyway", k + 1);
            }
            self.state.apply_merge(pair)?;
            self.window.push(lang.clone());
            let mut rec = self.record(k, pair, count);
            rec.lang = Some(lang.to_string());
            rec.cr_snapshot = Some(table.snapshot());
            rec.fallback = choice.fallback;
            rec.skipped = skipped;
            return Ok(Some(rec));
        }
        Ok(None)
    }

    fn record(&self, k: usize, pair: Pair, count: u64) -> StepRecord {
        let bytes = |id| self.state.model.token_bytes(id).unwrap_or_default().to_vec();
        StepRecord {
            step: k + 1,
            left: bytes(pair.0),
            right: bytes(pair.1),
            count,
            lang: None,
            cr_snapshot: None,
            fallback: false,
            skipped: Vec::new(),
        }
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<Training> {
        while self.step()? {}
        let cr_table = (self.config.parity_merges() > 0 || self.state.dev.is_some())
            .then(|| self.state.cr_table());
        Ok(Training {
            model: self.state.model,
            log: TrainLog {
                steps: self.steps,
                stop: self.stop.unwrap_or(StopStatus::Budget),
            },
            cr_table,
        })
    }
}

/// Result of a finished training run.
#[derive(Debug, Clone)]
pub struct Training {
    pub model: TokenizerModel,
    pub log: TrainLog,
    /// Final compression table when the run tracked one.
    pub cr_table: Option<CrTable>,
}
