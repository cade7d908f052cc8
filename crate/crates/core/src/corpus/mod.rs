//! Corpus loading and aggregation.
//!
//! Training text arrives as language-labeled JSONL and is reduced to one
//! [`WordMultiset`] per language. Development text is a line-aligned parallel
//! corpus with one `<lang>.txt` file per language.

mod pretok;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pretok::{is_whitespace, is_word, pretokenize, pretokens, word_count, PreTokens};

/// Language code such as `en` or `sw`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageId(String);

impl LanguageId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(Error::InvalidInput("empty language code".into()));
        }
        Ok(LanguageId(code))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageId::new(s)
    }
}

/// Unit in which text length is measured when computing compression rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormUnit {
    Bytes,
    Chars,
    Words,
    Lines,
}

impl NormUnit {
    pub const ALL: [NormUnit; 4] = [
        NormUnit::Bytes,
        NormUnit::Chars,
        NormUnit::Words,
        NormUnit::Lines,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormUnit::Bytes => "bytes",
            NormUnit::Chars => "chars",
            NormUnit::Words => "words",
            NormUnit::Lines => "lines",
        }
    }
}

impl fmt::Display for NormUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bytes" | "byte" => Ok(NormUnit::Bytes),
            "chars" | "char" | "characters" => Ok(NormUnit::Chars),
            "words" | "word" => Ok(NormUnit::Words),
            "lines" | "line" => Ok(NormUnit::Lines),
            other => Err(Error::InvalidConfig(format!("unknown unit `{other}`"))),
        }
    }
}

/// Length of a single record in some unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitLength {
    pub count: u64,
    /// Set when `chars` was requested but the text is not valid UTF-8; the
    /// count is then the byte length.
    pub utf8_fallback: bool,
}

/// Length of one record (`|b|_u`).
pub fn unit_length(text: &[u8], unit: NormUnit) -> UnitLength {
    let exact = |count| UnitLength {
        count,
        utf8_fallback: false,
    };
    match unit {
        NormUnit::Bytes => exact(text.len() as u64),
        NormUnit::Chars => match std::str::from_utf8(text) {
            Ok(s) => exact(s.chars().count() as u64),
            Err(_) => UnitLength {
                count: text.len() as u64,
                utf8_fallback: true,
            },
        },
        NormUnit::Words => exact(word_count(text)),
        NormUnit::Lines => exact(u64::from(!text.is_empty())),
    }
}

/// Summed lengths of a set of records in every unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTotals {
    pub bytes: u64,
    pub chars: u64,
    pub words: u64,
    pub lines: u64,
    #[serde(default)]
    pub utf8_fallback: bool,
}

impl UnitTotals {
    pub fn add_record(&mut self, text: &[u8]) {
        self.bytes += text.len() as u64;
        let chars = unit_length(text, NormUnit::Chars);
        self.chars += chars.count;
        self.utf8_fallback |= chars.utf8_fallback;
        self.words += word_count(text);
        self.lines += 1;
    }

    pub fn get(&self, unit: NormUnit) -> u64 {
        match unit {
            NormUnit::Bytes => self.bytes,
            NormUnit::Chars => self.chars,
            NormUnit::Words => self.words,
            NormUnit::Lines => self.lines,
        }
    }

    pub fn merge(&mut self, other: &UnitTotals) {
        self.bytes += other.bytes;
        self.chars += other.chars;
        self.words += other.words;
        self.lines += other.lines;
        self.utf8_fallback |= other.utf8_fallback;
    }
}

/// Pre-token occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordMultiset {
    entries: BTreeMap<Vec<u8>, u64>,
}

impl WordMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_text(&mut self, text: &[u8]) {
        for p in pretokens(text) {
            self.add(p, 1);
        }
    }

    pub fn add(&mut self, pretoken: &[u8], count: u64) {
        if pretoken.is_empty() || count == 0 {
            return;
        }
        *self.entries.entry(pretoken.to_vec()).or_insert(0) += count;
    }

    /// Adds every entry of `other`; merging is associative and commutative.
    pub fn merge(&mut self, other: &WordMultiset) {
        for (w, c) in &other.entries {
            self.add(w, *c);
        }
    }

    pub fn get(&self, pretoken: &[u8]) -> u64 {
        self.entries.get(pretoken).copied().unwrap_or(0)
    }

    /// Distinct pre-tokens.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of pre-token occurrences.
    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Entries in byte order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], u64)> + '_ {
        self.entries.iter().map(|(w, c)| (w.as_slice(), *c))
    }
}

impl<'a> FromIterator<(&'a [u8], u64)> for WordMultiset {
    fn from_iter<I: IntoIterator<Item = (&'a [u8], u64)>>(iter: I) -> Self {
        let mut m = WordMultiset::new();
        for (w, c) in iter {
            m.add(w, c);
        }
        m
    }
}

/// Language-labeled training text, aggregated per language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub per_language: BTreeMap<LanguageId, WordMultiset>,
    pub unit_totals: BTreeMap<LanguageId, UnitTotals>,
}

impl LabeledCorpus {
    /// Builds a corpus from `(lang, text)` records held in memory.
    pub fn from_records<I, L, T>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, T)>,
        L: AsRef<str>,
        T: AsRef<[u8]>,
    {
        let mut corpus = LabeledCorpus::default();
        for (lang, text) in records {
            corpus.push_record(LanguageId::new(lang.as_ref())?, text.as_ref());
        }
        Ok(corpus)
    }

    /// Builds a single-language corpus directly from pre-token counts. Every
    /// occurrence is treated as its own record.
    pub fn from_word_counts<'a, I>(lang: &str, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u8], u64)>,
    {
        let lang = LanguageId::new(lang)?;
        let mut corpus = LabeledCorpus::default();
        let multiset: WordMultiset = words.into_iter().collect();
        let mut totals = UnitTotals::default();
        for (w, c) in multiset.iter() {
            let mut one = UnitTotals::default();
            one.add_record(w);
            totals.bytes += one.bytes * c;
            totals.chars += one.chars * c;
            totals.words += one.words * c;
            totals.lines += c;
            totals.utf8_fallback |= one.utf8_fallback;
        }
        corpus.per_language.insert(lang.clone(), multiset);
        corpus.unit_totals.insert(lang, totals);
        Ok(corpus)
    }

    pub fn push_record(&mut self, lang: LanguageId, text: &[u8]) {
        self.per_language
            .entry(lang.clone())
            .or_default()
            .add_text(text);
        self.unit_totals.entry(lang).or_default().add_record(text);
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageId> + '_ {
        self.per_language.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.per_language.values().all(WordMultiset::is_empty)
    }

    /// Merges another corpus into this one.
    pub fn merge(&mut self, other: &LabeledCorpus) {
        for (lang, words) in &other.per_language {
            self.per_language
                .entry(lang.clone())
                .or_default()
                .merge(words);
        }
        for (lang, totals) in &other.unit_totals {
            self.unit_totals
                .entry(lang.clone())
                .or_default()
                .merge(totals);
        }
    }
}

/// `manifest.json`: which JSONL file holds which language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub languages: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub lang: String,
    pub path: PathBuf,
}

/// One line of a training JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub text: String,
    pub lang: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&raw).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut seen = std::collections::BTreeSet::new();
        for entry in &manifest.languages {
            LanguageId::new(entry.lang.as_str())?;
            if !seen.insert(entry.lang.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "language `{}` listed twice in {}",
                    entry.lang,
                    path.display()
                )));
            }
        }
        Ok(manifest)
    }
}

/// Loads every JSONL file named by `manifest`. Paths inside the manifest are
/// resolved relative to the manifest's directory. At most
/// `limit_per_language` records are kept per language.
pub fn load_labeled_corpus(
    manifest_path: &Path,
    limit_per_language: Option<usize>,
) -> Result<LabeledCorpus> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let declared: BTreeMap<&str, ()> = manifest
        .languages
        .iter()
        .map(|e| (e.lang.as_str(), ()))
        .collect();

    let mut corpus = LabeledCorpus::default();
    let mut kept: BTreeMap<String, usize> = BTreeMap::new();
    for entry in &manifest.languages {
        let path = base.join(&entry.path);
        let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: TrainingRecord =
                serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                    path: path.clone(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if !declared.contains_key(record.lang.as_str()) {
                return Err(Error::UnknownLanguage {
                    path: path.clone(),
                    line: idx + 1,
                    lang: record.lang,
                });
            }
            let n = kept.entry(record.lang.clone()).or_insert(0);
            if limit_per_language.is_some_and(|limit| *n >= limit) {
                continue;
            }
            *n += 1;
            corpus.push_record(LanguageId::new(record.lang)?, record.text.as_bytes());
        }
    }

    for entry in &manifest.languages {
        let lang = LanguageId::new(entry.lang.as_str())?;
        if corpus.per_language.get(&lang).is_none_or(WordMultiset::is_empty) {
            return Err(Error::EmptyPartition(entry.lang.clone()));
        }
    }
    for (lang, totals) in &corpus.unit_totals {
        if totals.utf8_fallback {
            warn!("{lang}: invalid UTF-8, character counts fall back to bytes");
        }
    }
    Ok(corpus)
}

/// Line-aligned multilingual corpus: `lines[l][i]` is record `i` of language
/// `languages[l]`, and record `i` carries the same content in every language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelDevCorpus {
    languages: Vec<LanguageId>,
    lines: Vec<Vec<Vec<u8>>>,
}

impl ParallelDevCorpus {
    /// Validates alignment and builds the corpus. Languages are kept in the
    /// given order.
    pub fn new(languages: Vec<LanguageId>, lines: Vec<Vec<Vec<u8>>>) -> Result<Self> {
        if languages.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if languages.len() != lines.len() {
            return Err(Error::InvalidInput(format!(
                "{} languages but {} line sets",
                languages.len(),
                lines.len()
            )));
        }
        let mut sorted = languages.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != languages.len() {
            return Err(Error::InvalidInput("duplicate dev language".into()));
        }
        let first = lines[0].len();
        if lines.iter().any(|l| l.len() != first) {
            let counts = languages
                .iter()
                .zip(&lines)
                .map(|(lang, l)| format!("{lang}={}", l.len()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::Alignment(format!("line counts differ ({counts})")));
        }
        if first == 0 {
            return Err(Error::EmptyCorpus);
        }
        for (lang, l) in languages.iter().zip(&lines) {
            if let Some(i) = l
                .iter()
                .position(|line| line.iter().all(|&b| is_whitespace(b)))
            {
                return Err(Error::Alignment(format!(
                    "{lang}: line {} is blank",
                    i + 1
                )));
            }
        }
        Ok(Self { languages, lines })
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    /// Number of aligned records.
    pub fn len(&self) -> usize {
        self.lines[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lines(&self, lang: &LanguageId) -> Option<&[Vec<u8>]> {
        self.languages
            .iter()
            .position(|l| l == lang)
            .map(|i| self.lines[i].as_slice())
    }

    /// `(language, lines)` pairs in corpus order.
    pub fn iter(&self) -> impl Iterator<Item = (&LanguageId, &[Vec<u8>])> + '_ {
        self.languages
            .iter()
            .zip(self.lines.iter().map(Vec::as_slice))
    }

    pub fn unit_totals(&self, lang: &LanguageId) -> Option<UnitTotals> {
        self.lines(lang).map(|lines| {
            let mut t = UnitTotals::default();
            for line in lines {
                t.add_record(line);
            }
            t
        })
    }
}

/// Languages with a `<lang>.txt` file in `dir`, sorted by code.
pub fn discover_dev_languages(dir: &Path) -> Result<Vec<LanguageId>> {
    let mut langs = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                langs.push(LanguageId::new(stem)?);
            }
        }
    }
    langs.sort();
    if langs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(langs)
}

/// Loads `<dir>/<lang>.txt` for each language. Line terminators (`\n` or
/// `\r\n`) are stripped; line content is otherwise kept raw.
pub fn load_parallel_dev(dir: &Path, languages: &[LanguageId]) -> Result<ParallelDevCorpus> {
    let mut lines = Vec::with_capacity(languages.len());
    for lang in languages {
        let path: PathBuf = dir.join(format!("{lang}.txt"));
        if !path.is_file() {
            return Err(Error::MissingLanguageFile {
                lang: lang.to_string(),
                path,
            });
        }
        let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        lines.push(split_lines(&raw));
    }
    ParallelDevCorpus::new(languages.to_vec(), lines)
}

fn split_lines(raw: &[u8]) -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = raw
        .split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l).to_vec())
        .collect();
    if raw.ends_with(b"\n") || raw.is_empty() {
        out.pop();
    }
    out
}
