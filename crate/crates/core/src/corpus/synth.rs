//! Seeded synthetic multilingual corpora.
//!
//! Every language renders the same abstract "concepts" with its own word
//! inventory over its own alphabet. A message is a Zipf-distributed sequence
//! of concept ranks; training records are independent messages, while dev
//! line `i` renders one shared message in every language, so dev lines are
//! content-aligned.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::{
    is_whitespace, LabeledCorpus, LanguageId, Manifest, ManifestEntry, ParallelDevCorpus,
    TrainingRecord,
};
use crate::error::{Error, Result};

const STREAM_INVENTORY: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_DEV: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLanguage {
    pub lang: String,
    /// Characters words are drawn from. Must not overlap other languages.
    pub alphabet: String,
    /// Share of `train_bytes` given to this language.
    pub proportion: f64,
    /// Inclusive word length range, in characters.
    pub word_length: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub languages: Vec<SynthLanguage>,
    /// Size of the shared concept inventory.
    pub concepts: usize,
    pub zipf_exponent: f64,
    /// Inclusive number of words per message.
    pub words_per_line: (usize, usize),
    /// Total UTF-8 bytes of training text across all languages.
    pub train_bytes: u64,
    pub dev_lines: usize,
}

impl SynthSpec {
    /// Three scripts of 1, 2 and 3 bytes per character with an 80/15/5 split.
    pub fn three_languages() -> Self {
        SynthSpec {
            languages: vec![
                SynthLanguage {
                    lang: "aa".into(),
                    alphabet: "abcdefghijklmnop".into(),
                    proportion: 0.80,
                    word_length: (2, 7),
                },
                SynthLanguage {
                    lang: "bb".into(),
                    alphabet: "αβγδεζηθικλμνξοπ".into(),
                    proportion: 0.15,
                    word_length: (2, 6),
                },
                SynthLanguage {
                    lang: "cc".into(),
                    alphabet: ('\u{4E00}'..'\u{4E10}').collect(),
                    proportion: 0.05,
                    word_length: (1, 4),
                },
            ],
            concepts: 400,
            zipf_exponent: 1.1,
            words_per_line: (6, 14),
            train_bytes: 400_000,
            dev_lines: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.languages.is_empty() {
            return bad("no languages".into());
        }
        if self.concepts == 0 {
            return bad("concepts must be positive".into());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            return bad("zipf_exponent must be positive".into());
        }
        let (lo, hi) = self.words_per_line;
        if lo == 0 || lo > hi {
            return bad(format!("bad words_per_line {lo}..={hi}"));
        }
        let sum: f64 = self.languages.iter().map(|l| l.proportion).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("proportions sum to {sum}, expected 1"));
        }
        let mut codes = BTreeSet::new();
        let mut owner: BTreeMap<char, &str> = BTreeMap::new();
        for l in &self.languages {
            super::LanguageId::new(l.lang.as_str())?;
            if !codes.insert(l.lang.as_str()) {
                return bad(format!("language `{}` listed twice", l.lang));
            }
            if l.proportion.is_nan() || l.proportion <= 0.0 {
                return bad(format!("{}: proportion must be positive", l.lang));
            }
            let (lo, hi) = l.word_length;
            if lo == 0 || lo > hi {
                return bad(format!("{}: bad word_length {lo}..={hi}", l.lang));
            }
            let chars: BTreeSet<char> = l.alphabet.chars().collect();
            if chars.is_empty() {
                return bad(format!("{}: empty alphabet", l.lang));
            }
            for c in chars {
                if c.is_whitespace() || (c.is_ascii() && is_whitespace(c as u8)) {
                    return bad(format!("{}: alphabet contains whitespace", l.lang));
                }
                if let Some(other) = owner.insert(c, l.lang.as_str()) {
                    return bad(format!(
                        "alphabets of `{other}` and `{}` overlap on {c:?}",
                        l.lang
                    ));
                }
            }
            let distinct = l.alphabet.chars().collect::<BTreeSet<_>>().len() as f64;
            let capacity: f64 = (lo..=hi).map(|n| distinct.powi(n as i32)).sum();
            if capacity < self.concepts as f64 {
                return bad(format!(
                    "{}: alphabet and word lengths cannot form {} distinct words",
                    l.lang, self.concepts
                ));
            }
        }
        Ok(())
    }
}

/// Byte and record counts of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub seed: u64,
    /// Target bytes per language (`proportion * train_bytes`).
    pub declared_bytes: BTreeMap<String, u64>,
    /// Bytes of training text actually emitted per language.
    pub train_bytes: BTreeMap<String, u64>,
    pub train_records: BTreeMap<String, u64>,
    pub dev_lines: usize,
}

/// Corpus held in memory before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    /// Training records per language, in generation order.
    pub train: BTreeMap<String, Vec<String>>,
    /// Aligned dev lines per language.
    pub dev: BTreeMap<String, Vec<String>>,
    pub summary: SynthSummary,
}

impl SynthCorpus {
    pub fn labeled(&self) -> Result<LabeledCorpus> {
        LabeledCorpus::from_records(
            self.train
                .iter()
                .flat_map(|(l, recs)| recs.iter().map(move |r| (l, r))),
        )
    }

    pub fn parallel_dev(&self) -> Result<ParallelDevCorpus> {
        let languages = self
            .dev
            .keys()
            .map(|l| LanguageId::new(l.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let lines = self
            .dev
            .values()
            .map(|ls| ls.iter().map(|l| l.as_bytes().to_vec()).collect())
            .collect();
        ParallelDevCorpus::new(languages, lines)
    }
}

/// Generates the corpus in memory. Pure in `(spec, seed)`.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<SynthCorpus> {
    spec.validate()?;
    let zipf = Zipf::new(spec.concepts as f64, spec.zipf_exponent)
        .map_err(|e| Error::InvalidConfig(format!("zipf: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_INVENTORY);
    let inventories: Vec<Vec<String>> = spec
        .languages
        .iter()
        .map(|l| inventory(l, spec.concepts, &mut rng))
        .collect();

    let message = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let n = rng.random_range(spec.words_per_line.0..=spec.words_per_line.1);
        (0..n).map(|_| zipf.sample(rng) as usize - 1).collect()
    };
    let render = |inv: &[String], msg: &[usize]| -> String {
        msg.iter()
            .map(|&c| inv[c].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut train = BTreeMap::new();
    let mut summary = SynthSummary {
        seed,
        declared_bytes: BTreeMap::new(),
        train_bytes: BTreeMap::new(),
        train_records: BTreeMap::new(),
        dev_lines: spec.dev_lines,
    };
    for (i, (l, inv)) in spec.languages.iter().zip(&inventories).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_TRAIN + 16 * i as u64);
        let target = (l.proportion * spec.train_bytes as f64).round() as u64;
        let mut bytes = 0u64;
        let mut records = Vec::new();
        while bytes < target {
            let text = render(inv, &message(&mut rng));
            bytes += text.len() as u64;
            records.push(text);
        }
        summary.declared_bytes.insert(l.lang.clone(), target);
        summary.train_bytes.insert(l.lang.clone(), bytes);
        summary
            .train_records
            .insert(l.lang.clone(), records.len() as u64);
        train.insert(l.lang.clone(), records);
    }

    let mut dev: BTreeMap<String, Vec<String>> = spec
        .languages
        .iter()
        .map(|l| (l.lang.clone(), Vec::with_capacity(spec.dev_lines)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_DEV);
    for _ in 0..spec.dev_lines {
        let msg = message(&mut rng);
        for (l, inv) in spec.languages.iter().zip(&inventories) {
            dev.get_mut(&l.lang).unwrap().push(render(inv, &msg));
        }
    }

    Ok(SynthCorpus {
        train,
        dev,
        summary,
    })
}

fn inventory(l: &SynthLanguage, concepts: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let alphabet: Vec<char> = l
        .alphabet
        .chars()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut seen = HashSet::with_capacity(concepts);
    let mut words = Vec::with_capacity(concepts);
    while words.len() < concepts {
        let len = rng.random_range(l.word_length.0..=l.word_length.1);
        let w: String = (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Paths of a corpus written by [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub dev_dir: PathBuf,
    pub summary: SynthSummary,
}

/// Writes `manifest.json`, `train/<lang>.jsonl`, `dev/<lang>.txt` and
/// `synth.json` under `out_dir`.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64, out_dir: &Path) -> Result<SynthOutput> {
    let corpus = synthesize(spec, seed)?;
    let train_dir = out_dir.join("train");
    let dev_dir = out_dir.join("dev");
    for d in [&train_dir, &dev_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    let mut manifest = Manifest { languages: vec![] };
    for l in &spec.languages {
        let rel = PathBuf::from("train").join(format!("{}.jsonl", l.lang));
        let path = out_dir.join(&rel);
        let mut w = create(&path)?;
        for text in &corpus.train[&l.lang] {
            let rec = TrainingRecord {
                text: text.clone(),
                lang: l.lang.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        manifest.languages.push(ManifestEntry {
            lang: l.lang.clone(),
            path: rel,
        });

        let path = dev_dir.join(format!("{}.txt", l.lang));
        let mut w = create(&path)?;
        for line in &corpus.dev[&l.lang] {
            w.write_all(line.as_bytes())
                .and_then(|_| w.write_all(b"\n"))
                .map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let manifest_path = out_dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    write_json(
        &out_dir.join("synth.json"),
        &serde_json::json!({ "spec": spec, "summary": corpus.summary }),
    )?;

    Ok(SynthOutput {
        manifest: manifest_path,
        dev_dir,
        summary: corpus.summary,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
