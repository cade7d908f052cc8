use super::{Trainer, Training};
use crate::corpus::LabeledCorpus;
use crate::error::Result;

/// Classical BPE with a budget of `merges`. Stops early when no pair occurs
/// at least twice.
pub fn train_classical(corpus: &LabeledCorpus, merges: usize) -> Result<Training> {
    Trainer::classical(corpus, merges)?.run()
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::trainer::{StopStatus, Trainer, MIN_PAIR_COUNT};

    type Bytes = Vec<u8>;

    /// Naive BPE over byte-string tokens, recounting from scratch each step.
    fn brute_force(words: &[(Bytes, u64)], k: usize) -> Vec<(Bytes, Bytes, u64)> {
        let mut segs: Vec<(Vec<Bytes>, u64)> = words
            .iter()
            .map(|(w, c)| (w.iter().map(|&b| vec![b]).collect(), *c))
            .collect();
        let mut learned = BTreeSet::new();
        let mut out = Vec::new();
        while out.len() < k {
            let mut counts: BTreeMap<(Bytes, Bytes), u64> = BTreeMap::new();
            for (toks, c) in &segs {
                for w in toks.windows(2) {
                    *counts.entry((w[0].clone(), w[1].clone())).or_default() += c;
                }
            }
            // BTreeMap iterates in ascending (left, right); keep the first max
            let mut best: Option<(&(Bytes, Bytes), u64)> = None;
            for (p, &c) in &counts {
                if c >= 2 && !learned.contains(p) && best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((p, c));
                }
            }
            let Some(((l, r), c)) = best.map(|(p, c)| (p.clone(), c)) else {
                break;
            };
            for (toks, _) in &mut segs {
                let mut merged = Vec::new();
                let mut i = 0;
                while i < toks.len() {
                    if i + 1 < toks.len() && toks[i] == l && toks[i + 1] == r {
                        merged.push([l.as_slice(), r.as_slice()].concat());
                        i += 2;
                    } else {
                        merged.push(toks[i].clone());
                        i += 1;
                    }
                }
                *toks = merged;
            }
            learned.insert((l.clone(), r.clone()));
            out.push((l, r, c));
        }
        out
    }

    fn random_words(rng: &mut ChaCha8Rng) -> Vec<(Bytes, u64)> {
        let alphabet = b"abcd";
        let n = rng.random_range(1..=50);
        let mut words = BTreeMap::new();
        for _ in 0..n {
            let len = rng.random_range(1..=8);
            let w: Bytes = (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect();
            *words.entry(w).or_insert(0) += rng.random_range(1..=5u64);
        }
        words.into_iter().collect()
    }

    fn from_words(words: &[(Bytes, u64)]) -> LabeledCorpus {
        LabeledCorpus::from_word_counts("aa", words.iter().map(|(w, c)| (w.as_slice(), *c)))
            .unwrap()
    }

    fn corpus(words: &[(&str, u64)]) -> LabeledCorpus {
        LabeledCorpus::from_word_counts("aa", words.iter().map(|(w, c)| (w.as_bytes(), *c)))
            .unwrap()
    }

    fn merges(t: &Training) -> Vec<(Vec<u8>, Vec<u8>)> {
        t.model
            .merges()
            .map(|m| (m.left.to_vec(), m.right.to_vec()))
            .collect()
    }

    #[test]
    fn zero_budget_is_identity() {
        let t = train_classical(&corpus(&[("abab", 2)]), 0).unwrap();
        assert_eq!(t.model.num_merges(), 0);
        assert_eq!(t.model.vocab_size(), 256);
        assert_eq!(t.log.stop, StopStatus::Budget);
    }

    #[test]
    fn abab_twice() {
        // (a,b):4 (b,a):2 -> ab; then (ab,ab):2
        let t = train_classical(&corpus(&[("abab", 2)]), 2).unwrap();
        assert_eq!(
            merges(&t),
            vec![
                (b"a".to_vec(), b"b".to_vec()),
                (b"ab".to_vec(), b"ab".to_vec())
            ]
        );
        assert_eq!(t.log.steps[0].count, 4);
        assert_eq!(t.log.steps[1].count, 2);
    }

    #[test]
    fn abab_corpus_picks_ab_first() {
        let t = train_classical(
            &LabeledCorpus::from_records([("aa", "abab abab")]).unwrap(),
            1,
        )
        .unwrap();
        assert_eq!(merges(&t), vec![(b"a".to_vec(), b"b".to_vec())]);
    }

    #[test]
    fn stops_when_pairs_are_singletons() {
        let t = train_classical(&corpus(&[("abcd", 1)]), 5).unwrap();
        assert_eq!(t.model.num_merges(), 0);
        assert_eq!(t.log.stop, StopStatus::Exhausted);

        let t = train_classical(&corpus(&[("xyxy", 1), ("q", 1)]), 5).unwrap();
        // (x,y) appears twice; afterwards only count-1 pairs remain
        assert_eq!(t.model.num_merges(), 1);
        assert!(t.log.steps.iter().all(|s| s.count >= MIN_PAIR_COUNT));
    }

    #[test]
    fn deterministic() {
        let c = LabeledCorpus::from_records([
            ("aa", "the cat sat on the mat the end"),
            ("bb", "a bat and a cat and a hat"),
        ])
        .unwrap();
        let a = train_classical(&c, 20).unwrap();
        let b = train_classical(&c, 20).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let words = random_words(&mut rng);
            let k = rng.random_range(0..=10);
            let t = train_classical(&from_words(&words), k).unwrap();
            let got: Vec<(Bytes, Bytes, u64)> = t
                .model
                .merges()
                .zip(&t.log.steps)
                .map(|(m, s)| (m.left.to_vec(), m.right.to_vec(), s.count))
                .collect();
            assert_eq!(got, brute_force(&words, k), "corpus {words:?}");
        }
    }

    #[test]
    fn incremental_counts_match_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let words: Vec<(Bytes, u64)> = (0..300)
            .map(|_| {
                let len = rng.random_range(1..=12);
                let w = (0..len).map(|_| b"abcdefg"[rng.random_range(0..7)]).collect();
                (w, rng.random_range(1..=9))
            })
            .collect();
        let mut c = LabeledCorpus::default();
        for (i, (w, n)) in words.iter().enumerate() {
            let lang = if i % 3 == 0 { "bb" } else { "aa" };
            c.merge(&LabeledCorpus::from_word_counts(lang, [(w.as_slice(), *n)]).unwrap());
        }
        let mut trainer = Trainer::classical(&c, 50).unwrap();
        while trainer.step().unwrap() {
            let state = trainer.state();
            assert_eq!(state.global_counts(), &state.recount(None));
            for l in 0..state.languages().len() {
                assert_eq!(state.pair_counts(l), &state.recount(Some(l)));
            }
        }
        assert_eq!(trainer.steps().len(), 50);
    }
}
