//! Intrinsic tokenizer metrics: compression, fertility, vocabulary use,
//! unigram statistics, cross-language inequality and morpheme boundaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{unit_length, word_count, NormUnit, ParallelDevCorpus};
use crate::error::{Error, Result};
use crate::tokenizer::{TokenId, TokenizerModel};

/// Rényi order used when none is given.
pub const DEFAULT_RENYI_ALPHA: f64 = 2.5;

/// Compression rate of a document collection under both estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionRate {
    pub unit: NormUnit,
    /// Mean over documents of `|b|_u / |tokens(b)|`.
    pub mean_of_ratios: f64,
    /// `sum |b|_u / sum |tokens(b)|`.
    pub ratio_of_sums: f64,
    pub unit_total: u64,
    pub token_total: u64,
    pub documents: u64,
}

#[derive(Debug, Clone, Default)]
struct RateAcc {
    ratio_sum: f64,
    unit_total: u64,
    token_total: u64,
    documents: u64,
}

impl RateAcc {
    fn add(&mut self, units: u64, tokens: u64) {
        self.ratio_sum += units as f64 / tokens as f64;
        self.unit_total += units;
        self.token_total += tokens;
        self.documents += 1;
    }

    fn merge(&mut self, other: &RateAcc) {
        self.ratio_sum += other.ratio_sum;
        self.unit_total += other.unit_total;
        self.token_total += other.token_total;
        self.documents += other.documents;
    }

    fn finish(&self, unit: NormUnit) -> Result<CompressionRate> {
        if self.documents == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(CompressionRate {
            unit,
            mean_of_ratios: self.ratio_sum / self.documents as f64,
            ratio_of_sums: self.unit_total as f64 / self.token_total as f64,
            unit_total: self.unit_total,
            token_total: self.token_total,
            documents: self.documents,
        })
    }
}

fn doc_token_count(model: &TokenizerModel, doc: &[u8]) -> Result<u64> {
    if doc.is_empty() {
        return Err(Error::InvalidInput("empty document".into()));
    }
    Ok(model.token_count(doc) as u64)
}

pub fn compression_rate<D: AsRef<[u8]>>(
    model: &TokenizerModel,
    docs: &[D],
    unit: NormUnit,
) -> Result<CompressionRate> {
    let mut acc = RateAcc::default();
    for d in docs {
        let d = d.as_ref();
        acc.add(unit_length(d, unit).count, doc_token_count(model, d)?);
    }
    acc.finish(unit)
}

/// Rate of each dev language plus the rate over all languages together.
pub fn compression_rate_per_language(
    model: &TokenizerModel,
    dev: &ParallelDevCorpus,
    unit: NormUnit,
) -> Result<(CompressionRate, BTreeMap<String, CompressionRate>)> {
    let mut global = RateAcc::default();
    let mut per = BTreeMap::new();
    for (lang, lines) in dev.iter() {
        let mut acc = RateAcc::default();
        for line in lines {
            acc.add(unit_length(line, unit).count, doc_token_count(model, line)?);
        }
        global.merge(&acc);
        per.insert(lang.to_string(), acc.finish(unit)?);
    }
    Ok((global.finish(unit)?, per))
}

/// Tokens per whitespace-delimited word.
pub fn fertility<D: AsRef<[u8]>>(model: &TokenizerModel, docs: &[D]) -> Result<f64> {
    let (mut tokens, mut words) = (0u64, 0u64);
    for d in docs {
        tokens += model.token_count(d.as_ref()) as u64;
        words += word_count(d.as_ref());
    }
    if words == 0 {
        return Err(Error::InvalidInput("no words to compute fertility".into()));
    }
    Ok(tokens as f64 / words as f64)
}

/// Share of the vocabulary that occurs when encoding `docs`.
pub fn vocab_utilization<D: AsRef<[u8]>>(model: &TokenizerModel, docs: &[D]) -> f64 {
    let seen: BTreeSet<TokenId> = docs
        .iter()
        .flat_map(|d| model.encode_ids(d.as_ref()))
        .collect();
    seen.len() as f64 / model.vocab_size() as f64
}

/// Distinct tokens over total tokens.
pub fn type_token_ratio<D: AsRef<[u8]>>(model: &TokenizerModel, docs: &[D]) -> Result<f64> {
    Ok(UnigramDistribution::from_corpus(model, docs)?.type_token_ratio())
}

/// Empirical token frequencies over an evaluation corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnigramDistribution {
    freq: BTreeMap<Vec<u8>, u64>,
    total: u64,
}

impl UnigramDistribution {
    /// Zero counts are dropped; at least one positive count is required.
    pub fn from_counts<T: Into<Vec<u8>>>(counts: impl IntoIterator<Item = (T, u64)>) -> Result<Self> {
        let mut freq = BTreeMap::new();
        for (t, c) in counts {
            if c > 0 {
                *freq.entry(t.into()).or_insert(0) += c;
            }
        }
        let total = freq.values().sum();
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(UnigramDistribution { freq, total })
    }

    pub fn from_corpus<D: AsRef<[u8]>>(model: &TokenizerModel, docs: &[D]) -> Result<Self> {
        let mut ids: HashMap<TokenId, u64> = HashMap::new();
        for d in docs {
            for id in model.encode_ids(d.as_ref()) {
                *ids.entry(id).or_insert(0) += 1;
            }
        }
        Self::from_counts(ids.into_iter().map(|(id, c)| {
            (model.token_bytes(id).unwrap_or_default().to_vec(), c)
        }))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct tokens observed.
    pub fn types(&self) -> usize {
        self.freq.len()
    }

    pub fn count(&self, token: &[u8]) -> u64 {
        self.freq.get(token).copied().unwrap_or(0)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.freq.values().map(|&c| c as f64 / self.total as f64)
    }

    pub fn type_token_ratio(&self) -> f64 {
        self.types() as f64 / self.total as f64
    }

    /// Tokens by descending count, ties by ascending bytes.
    pub fn ranked(&self) -> Vec<(&[u8], u64)> {
        let mut v: Vec<(&[u8], u64)> = self.freq.iter().map(|(t, &c)| (t.as_slice(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Frequency-weighted mean rank, the most frequent token having rank 1.
pub fn avg_token_rank(dist: &UnigramDistribution) -> f64 {
    let weighted: f64 = dist
        .ranked()
        .iter()
        .enumerate()
        .map(|(i, (_, c))| (i + 1) as f64 * *c as f64)
        .sum();
    weighted / dist.total as f64
}

/// Rényi entropy in bits. `alpha = 1` gives Shannon entropy and
/// `alpha = f64::INFINITY` min-entropy.
pub fn renyi_entropy(dist: &UnigramDistribution, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Rényi order must be positive, got {alpha}"
        )));
    }
    let h = if alpha == 1.0 {
        -dist.probabilities().map(|p| p * p.log2()).sum::<f64>()
    } else if alpha.is_infinite() {
        -dist.probabilities().fold(0.0, f64::max).log2()
    } else {
        dist.probabilities().map(|p| p.powf(alpha)).sum::<f64>().log2() / (1.0 - alpha)
    };
    // clamp rounding noise around the bounds
    Ok(h.clamp(0.0, (dist.types() as f64).log2()))
}

/// Inequality of per-language costs: 0 when all are equal.
pub fn gini(costs: &[f64]) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::InvalidInput("no costs".into()));
    }
    if let Some(c) = costs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::InvalidInput(format!("cost must be positive, got {c}")));
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, c)| (n - i as f64) * c)
        .sum();
    Ok(((n + 1.0 - 2.0 * weighted / total) / n).max(0.0))
}

/// Per-language token cost, e.g. tokens per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    pub unit: NormUnit,
    pub costs: BTreeMap<String, f64>,
}

impl CostVector {
    /// Average tokens per `unit` for every dev language.
    pub fn from_dev(model: &TokenizerModel, dev: &ParallelDevCorpus, unit: NormUnit) -> Result<Self> {
        let (_, per) = compression_rate_per_language(model, dev, unit)?;
        let costs = per
            .into_iter()
            .map(|(l, cr)| {
                if cr.unit_total == 0 {
                    return Err(Error::InvalidInput(format!("`{l}` has zero length in {unit}")));
                }
                Ok((l, cr.token_total as f64 / cr.unit_total as f64))
            })
            .collect::<Result<_>>()?;
        Ok(CostVector { unit, costs })
    }

    pub fn gini(&self) -> Result<f64> {
        gini(&self.costs.values().copied().collect::<Vec<_>>())
    }
}

/// Reference morpheme segmentation of one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegmentation {
    pub word: Vec<u8>,
    /// Interior byte offsets where a morpheme ends.
    pub boundaries: BTreeSet<usize>,
}

impl GoldSegmentation {
    pub fn new(word: Vec<u8>, boundaries: BTreeSet<usize>) -> Result<Self> {
        if let Some(b) = boundaries.iter().find(|&&b| b == 0 || b >= word.len()) {
            return Err(Error::InvalidInput(format!(
                "boundary {b} is outside `{}`",
                String::from_utf8_lossy(&word)
            )));
        }
        Ok(GoldSegmentation { word, boundaries })
    }

    pub fn from_morphemes<M: AsRef<[u8]>>(morphemes: &[M]) -> Result<Self> {
        let mut word = Vec::new();
        let mut boundaries = BTreeSet::new();
        for (i, m) in morphemes.iter().enumerate() {
            if i > 0 {
                boundaries.insert(word.len());
            }
            word.extend_from_slice(m.as_ref());
        }
        Self::new(word, boundaries)
    }
}

/// Parses `word<TAB>morph|morph|...` lines. Blank lines are skipped.
pub fn parse_gold_tsv(text: &str) -> Result<Vec<GoldSegmentation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::InvalidInput(format!("gold line {}: {m}", i + 1));
        let (word, seg) = line.split_once('\t').ok_or_else(|| bad("expected word<TAB>segmentation"))?;
        let morphs: Vec<&str> = seg.split('|').collect();
        if morphs.iter().any(|m| m.is_empty()) {
            return Err(bad("empty morpheme"));
        }
        if morphs.concat() != word {
            return Err(bad("segmentation does not spell the word"));
        }
        out.push(GoldSegmentation::from_morphemes(&morphs).map_err(|e| bad(&e.to_string()))?);
    }
    Ok(out)
}

/// Macro-averaged morpheme boundary precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub words: usize,
}

/// Scores the boundaries between consecutive tokens of each gold word,
/// tokenized on its own. An empty prediction has precision 1; an empty gold
/// set has recall 1.
pub fn morph_boundary_scores(model: &TokenizerModel, gold: &[GoldSegmentation]) -> Result<MorphScores> {
    if gold.is_empty() {
        return Err(Error::InvalidInput("no gold segmentations".into()));
    }
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    for g in gold {
        let mut pred = BTreeSet::new();
        let mut offset = 0;
        let tokens = model.encode(&g.word);
        for t in &tokens[..tokens.len().saturating_sub(1)] {
            offset += t.as_bytes().len();
            pred.insert(offset);
        }
        let hits = pred.intersection(&g.boundaries).count() as f64;
        p_sum += if pred.is_empty() { 1.0 } else { hits / pred.len() as f64 };
        r_sum += if g.boundaries.is_empty() {
            1.0
        } else {
            hits / g.boundaries.len() as f64
        };
    }
    let n = gold.len() as f64;
    let (precision, recall) = (p_sum / n, r_sum / n);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MorphScores {
        precision,
        recall,
        f1,
        words: gold.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Units compression is reported in.
    pub units: Vec<NormUnit>,
    pub renyi_alphas: Vec<f64>,
    pub gold: Option<Vec<GoldSegmentation>>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            units: NormUnit::ALL.to_vec(),
            renyi_alphas: vec![DEFAULT_RENYI_ALPHA],
            gold: None,
        }
    }
}

/// Metrics of one token stream (one language or all of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Keyed by unit name.
    pub compression: BTreeMap<String, CompressionRate>,
    pub fertility: f64,
    pub vocab_utilization: f64,
    pub type_token_ratio: f64,
    pub avg_token_rank: f64,
    /// Bits, keyed by order (`"inf"` for min-entropy).
    pub renyi_entropy: BTreeMap<String, f64>,
    pub tokens: u64,
    pub tokens_per_line: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    #[serde(flatten)]
    pub metrics: MetricSet,
    /// Gini coefficient of per-language tokens per line.
    pub gini: f64,
    /// Largest over smallest per-language line compression rate.
    pub cr_spread: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morph_boundary_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morph_boundary_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morph_boundary_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub model_sha256: String,
    pub merges: usize,
    pub vocab_size: usize,
    pub dev_sha256: String,
    pub dev_languages: Vec<String>,
    pub dev_lines: usize,
    pub units: Vec<NormUnit>,
    pub renyi_alphas: Vec<String>,
    pub gini_cost: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_words: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub global: GlobalMetrics,
    pub per_language: BTreeMap<String, MetricSet>,
    pub provenance: ReportProvenance,
}

/// Key used for a Rényi order in reports.
pub fn renyi_key(alpha: f64) -> String {
    if alpha.is_infinite() {
        "inf".into()
    } else {
        format!("{alpha}")
    }
}

/// SHA-256 over every dev line, language by language.
pub fn dev_digest(dev: &ParallelDevCorpus) -> String {
    let mut h = Sha256::new();
    for (lang, lines) in dev.iter() {
        h.update(lang.as_str().as_bytes());
        h.update([0]);
        for line in lines {
            h.update((line.len() as u64).to_le_bytes());
            h.update(line);
        }
    }
    hex::encode(h.finalize())
}

fn metric_set(
    model: &TokenizerModel,
    lines: &[&[u8]],
    options: &EvalOptions,
) -> Result<MetricSet> {
    let mut compression = BTreeMap::new();
    for &unit in &options.units {
        compression.insert(unit.to_string(), compression_rate(model, lines, unit)?);
    }
    let dist = UnigramDistribution::from_corpus(model, lines)?;
    let mut renyi = BTreeMap::new();
    for &a in &options.renyi_alphas {
        renyi.insert(renyi_key(a), renyi_entropy(&dist, a)?);
    }
    Ok(MetricSet {
        compression,
        fertility: fertility(model, lines)?,
        vocab_utilization: dist.types() as f64 / model.vocab_size() as f64,
        type_token_ratio: dist.type_token_ratio(),
        avg_token_rank: avg_token_rank(&dist),
        renyi_entropy: renyi,
        tokens: dist.total(),
        tokens_per_line: dist.total() as f64 / lines.len() as f64,
    })
}

/// Every metric per dev language and over the pooled dev corpus.
pub fn full_report(
    model: &TokenizerModel,
    dev: &ParallelDevCorpus,
    options: &EvalOptions,
) -> Result<MetricReport> {
    let mut per_language = BTreeMap::new();
    let mut all: Vec<&[u8]> = Vec::new();
    for (lang, lines) in dev.iter() {
        let lines: Vec<&[u8]> = lines.iter().map(Vec::as_slice).collect();
        per_language.insert(lang.to_string(), metric_set(model, &lines, options)?);
        all.extend(lines);
    }
    let costs: Vec<f64> = per_language.values().map(|m| m.tokens_per_line).collect();
    let spread = costs.iter().copied().fold(f64::MIN, f64::max)
        / costs.iter().copied().fold(f64::MAX, f64::min);
    let morph = options
        .gold
        .as_ref()
        .map(|g| morph_boundary_scores(model, g))
        .transpose()?;
    Ok(MetricReport {
        global: GlobalMetrics {
            metrics: metric_set(model, &all, options)?,
            gini: gini(&costs)?,
            cr_spread: spread,
            morph_boundary_p: morph.as_ref().map(|m| m.precision),
            morph_boundary_r: morph.as_ref().map(|m| m.recall),
            morph_boundary_f1: morph.as_ref().map(|m| m.f1),
        },
        per_language,
        provenance: ReportProvenance {
            model_sha256: model.digest(),
            merges: model.num_merges(),
            vocab_size: model.vocab_size(),
            dev_sha256: dev_digest(dev),
            dev_languages: dev.languages().iter().map(|l| l.to_string()).collect(),
            dev_lines: dev.len(),
            units: options.units.clone(),
            renyi_alphas: options.renyi_alphas.iter().map(|&a| renyi_key(a)).collect(),
            gini_cost: "tokens_per_line".into(),
            gold_words: options.gold.as_ref().map(Vec::len),
        },
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::corpus::LanguageId;

    fn pairwise_gini(c: &[f64]) -> f64 {
        let n = c.len() as f64;
        let mean = c.iter().sum::<f64>() / n;
        let diff: f64 = c.iter().flat_map(|a| c.iter().map(move |b| (a - b).abs())).sum();
        diff / (2.0 * n * n * mean)
    }

    fn dist(counts: &[u64]) -> UnigramDistribution {
        UnigramDistribution::from_counts(counts.iter().enumerate().map(|(i, &c)| (vec![i as u8], c)))
            .unwrap()
    }

    fn example_model() -> TokenizerModel {
        TokenizerModel::from_merges([("b", "a"), ("ba", "b")]).unwrap()
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((gini(&[1.0, 2.0, 3.0]).unwrap() - 8.0 / 36.0).abs() < 1e-12);
        assert_eq!(gini(&[7.0]).unwrap(), 0.0);
        assert!(gini(&[]).is_err());
        assert!(gini(&[1.0, 0.0]).is_err());
        assert!(gini(&[1.0, -2.0]).is_err());
    }

    proptest! {
        #[test]
        fn gini_matches_pairwise(c in proptest::collection::vec(0.01f64..100.0, 1..20)) {
            let g = gini(&c).unwrap();
            prop_assert!((g - pairwise_gini(&c)).abs() < 1e-9);
            prop_assert!((0.0..1.0).contains(&g));
        }

        #[test]
        fn gini_scale_and_permutation_invariant(
            c in proptest::collection::vec(0.01f64..100.0, 1..20),
            k in 0.001f64..1000.0,
        ) {
            let g = gini(&c).unwrap();
            let scaled: Vec<f64> = c.iter().map(|x| x * k).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-9);
            let mut rev = c.clone();
            rev.reverse();
            prop_assert!((gini(&rev).unwrap() - g).abs() < 1e-12);
        }

        #[test]
        fn renyi_non_increasing(counts in proptest::collection::vec(1u64..1000, 1..30)) {
            let d = dist(&counts);
            let alphas = [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 4.0, 10.0, f64::INFINITY];
            let h: Vec<f64> = alphas.iter().map(|&a| renyi_entropy(&d, a).unwrap()).collect();
            for w in h.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{h:?}");
            }
            prop_assert!(h[0] <= (counts.len() as f64).log2() + 1e-12);
        }
    }

    #[test]
    fn renyi_examples() {
        let uniform = dist(&[5, 5, 5, 5]);
        for a in [0.5, 1.0, 2.0, 2.5, f64::INFINITY] {
            assert!((renyi_entropy(&uniform, a).unwrap() - 2.0).abs() < 1e-12);
        }
        let half = dist(&[1, 1]);
        assert!((renyi_entropy(&half, 3.0).unwrap() - 1.0).abs() < 1e-12);
        let skew = dist(&[3, 1]);
        let expect = -(0.75f64 * 0.75 + 0.25 * 0.25).log2();
        assert!((renyi_entropy(&skew, 2.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.678).abs() < 1e-3);
        // approaching order 2 from both sides
        let near = |a: f64| renyi_entropy(&skew, a).unwrap();
        assert!((near(2.0 - 1e-7) - expect).abs() < 1e-6);
        assert!((near(2.0 + 1e-7) - expect).abs() < 1e-6);
        assert!((near(1.0 + 1e-9) - near(1.0)).abs() < 1e-6);
        assert!(renyi_entropy(&skew, 0.0).is_err());
        assert!(renyi_entropy(&skew, -1.0).is_err());
    }

    #[test]
    fn compression_estimators() {
        let id = TokenizerModel::identity();
        let docs = ["hello world", "é"];
        let cr = compression_rate(&id, &docs, NormUnit::Bytes).unwrap();
        assert_eq!((cr.mean_of_ratios, cr.ratio_of_sums), (1.0, 1.0));

        // "ab ab" encodes as [ab, " ", ab]
        let m = TokenizerModel::from_merges([("a", "b")]).unwrap();
        let docs = ["abab", "ab ab"];
        let cr = compression_rate(&m, &docs, NormUnit::Bytes).unwrap();
        // doc ratios 4/2 and 5/3
        assert!((cr.mean_of_ratios - (2.0 + 5.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((cr.ratio_of_sums - 9.0 / 5.0).abs() < 1e-12);

        let cr = compression_rate(&example_model(), &["babab"], NormUnit::Bytes).unwrap();
        assert_eq!(cr.ratio_of_sums, 2.5);
        assert!(compression_rate(&id, &[""], NormUnit::Bytes).is_err());
        assert!(compression_rate::<&str>(&id, &[], NormUnit::Bytes).is_err());
    }

    #[test]
    fn fertility_examples() {
        let m = TokenizerModel::from_merges([
            ("u", "n"),
            ("h", "a"),
            ("ha", "p"),
            ("hap", "p"),
            ("happ", "i"),
            ("n", "e"),
            ("ne", "s"),
            ("nes", "s"),
        ])
        .unwrap();
        assert_eq!(m.encode(b"unhappiness").len(), 3);
        assert_eq!(fertility(&m, &["unhappiness"]).unwrap(), 3.0);

        let m = TokenizerModel::from_merges([("a", "b"), (" ", "ab")]).unwrap();
        assert_eq!(fertility(&m, &["ab ab ab"]).unwrap(), 1.0);
        assert!(fertility(&m, &["   "]).is_err());

        let docs = ["ab ab ab c", "abc  d"];
        let f = fertility(&m, &docs).unwrap();
        let cr = compression_rate(&m, &docs, NormUnit::Words).unwrap();
        assert!((f * cr.ratio_of_sums - 1.0).abs() < 1e-12);
    }

    #[test]
    fn utilization_and_ttr() {
        let id = TokenizerModel::identity();
        let all: Vec<u8> = (0..=255).collect();
        assert_eq!(vocab_utilization(&id, &[all]), 1.0);
        assert_eq!(vocab_utilization(&id, &["abcdefghij"]), 10.0 / 256.0);
        assert_eq!(type_token_ratio(&id, &["abcd"]).unwrap(), 1.0);
        assert_eq!(type_token_ratio(&id, &["aaaaa"]).unwrap(), 0.2);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(avg_token_rank(&dist(&[4, 4, 4])), 2.0);
        assert_eq!(avg_token_rank(&dist(&[9])), 1.0);
        // explicit oracle: sort counts descending, weight ranks
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let counts: Vec<u64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(1..50)).collect();
            let mut sorted = counts.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let total: u64 = sorted.iter().sum();
            let expect: f64 = sorted
                .iter()
                .enumerate()
                .map(|(i, &c)| (i + 1) as f64 * c as f64)
                .sum::<f64>()
                / total as f64;
            let got = avg_token_rank(&dist(&counts));
            assert!((got - expect).abs() < 1e-9);
            assert!(got >= 1.0 && got <= counts.len() as f64);
        }
    }

    #[test]
    fn rank_ties_by_bytes() {
        let d = UnigramDistribution::from_counts([(b"b".to_vec(), 2), (b"a".to_vec(), 2), (b"c".to_vec(), 5)])
            .unwrap();
        let order: Vec<&[u8]> = d.ranked().iter().map(|(t, _)| *t).collect();
        assert_eq!(order, vec![&b"c"[..], b"a", b"b"]);
    }

    #[test]
    fn morph_examples() {
        let g = GoldSegmentation::from_morphemes(&["un", "happi", "ness"]).unwrap();
        assert_eq!(g.boundaries, BTreeSet::from([2, 7]));

        // tokens [un, happiness]
        let mut merges: Vec<(Vec<u8>, Vec<u8>)> = vec![(b"u".to_vec(), b"n".to_vec())];
        let mut acc = b"h".to_vec();
        for &b in b"appiness" {
            merges.push((acc.clone(), vec![b]));
            acc.push(b);
        }
        let m = TokenizerModel::from_merges(merges).unwrap();
        assert_eq!(m.encode(b"unhappiness").len(), 2);
        let s = morph_boundary_scores(&m, &[g]).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 0.5));

        let id = TokenizerModel::identity();
        let single = GoldSegmentation::from_morphemes(&["a", "b"]).unwrap();
        let s = morph_boundary_scores(&id, &[single]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        let m = TokenizerModel::from_merges([("a", "b")]).unwrap();
        let s = morph_boundary_scores(&m, &[GoldSegmentation::from_morphemes(&["a", "b"]).unwrap()])
            .unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 0.0));

        assert!(morph_boundary_scores(&m, &[]).is_err());
        assert!(GoldSegmentation::new(b"ab".to_vec(), BTreeSet::from([2])).is_err());
        assert!(GoldSegmentation::new(b"ab".to_vec(), BTreeSet::from([0])).is_err());
    }

    #[test]
    fn gold_tsv() {
        let g = parse_gold_tsv("unhappiness\tun|happi|ness\n\ncats\tcat|s\r\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].boundaries, BTreeSet::from([3]));
        assert!(parse_gold_tsv("cats\tca|s\n").is_err());
        assert!(parse_gold_tsv("cats cat|s\n").is_err());
        assert!(parse_gold_tsv("cats\tcat||s\n").is_err());
    }

    fn dev() -> ParallelDevCorpus {
        ParallelDevCorpus::new(
            vec![LanguageId::new("aa").unwrap(), LanguageId::new("bb").unwrap()],
            vec![
                vec![b"ab ab".to_vec(), b"abc".to_vec()],
                vec!["αβ αβγ".as_bytes().to_vec(), "γγ".as_bytes().to_vec()],
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_report_closed_form() {
        let d = dev();
        let r = full_report(&TokenizerModel::identity(), &d, &EvalOptions::default()).unwrap();
        assert_eq!(r.global.metrics.compression["bytes"].ratio_of_sums, 1.0);
        assert_eq!(r.global.metrics.compression["bytes"].mean_of_ratios, 1.0);
        // tokens per line equals bytes per line
        let aa = (5 + 3) as f64 / 2.0;
        let bb = (11 + 4) as f64 / 2.0;
        assert_eq!(r.per_language["aa"].tokens_per_line, aa);
        assert!((r.global.gini - pairwise_gini(&[aa, bb])).abs() < 1e-12);
        // 3 words, 8 bytes
        assert_eq!(r.per_language["aa"].fertility, 8.0 / 3.0);
        assert_eq!(r.global.cr_spread, bb / aa);
    }

    #[test]
    fn report_roundtrips_and_is_pure() {
        let d = dev();
        let opts = EvalOptions {
            renyi_alphas: vec![1.0, 2.5, f64::INFINITY],
            gold: Some(parse_gold_tsv("abc\tab|c\n").unwrap()),
            ..EvalOptions::default()
        };
        let m = TokenizerModel::from_merges([("a", "b"), ("ab", "c")]).unwrap();
        let r = full_report(&m, &d, &opts).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(full_report(&m, &d, &opts).unwrap(), r);
        assert!(r.global.metrics.renyi_entropy.contains_key("inf"));
        assert_eq!(r.global.morph_boundary_p, Some(1.0));
        let cost = CostVector::from_dev(&m, &d, NormUnit::Lines).unwrap();
        assert_eq!(cost.gini().unwrap(), r.global.gini);
    }
}
