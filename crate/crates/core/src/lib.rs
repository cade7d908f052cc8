//! Byte-level BPE with classical and parity-aware merge learning.
//!
//! Text is split into pre-tokens at whitespace boundaries and every
//! pre-token is segmented into bytes, so any input round-trips losslessly.
//! [`trainer`] learns merge lists; [`tokenizer`] applies them; [`metrics`]
//! measures compression and cross-language fairness on a parallel corpus.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod tokenizer;
pub mod trainer;

pub use corpus::{LabeledCorpus, LanguageId, NormUnit, ParallelDevCorpus};
pub use error::{Error, Result};
pub use tokenizer::{Token, TokenId, TokenizerModel};
pub use trainer::{train_classical, train_no_dev, train_parity, ParityConfig, Training};
