//! Product attribute-value identification as sequence-to-set generation.
//!
//! The crate covers the whole experimental pipeline:
//!
//! * [`corpus`]: data model, JSONL ingestion, unification, statistics and a
//!   seeded synthetic corpus generator;
//! * [`ordering`]: training-set pair frequencies and the rare-first,
//!   common-first and global-random pair orderings;
//! * [`codec`]: linearization of ordered pair lists into target token
//!   sequences and the tolerant inverse parser;
//! * [`seq2seq`]: a small GRU encoder-decoder with attention, trained with
//!   teacher forcing and Adam, decoded with beam search;
//! * [`baselines`]: BILOU span tagging and multi-label classification with
//!   optional taxonomy label masking;
//! * [`metrics`]: outcome categorization with the discard rule, micro and
//!   attribute-level macro scores, and subset/quadrant analyses.

pub mod baselines;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod ordering;
pub mod seq2seq;
pub mod tokenize;

pub use corpus::{AttributeValuePair, Corpus, PairSet, ProductExample, Span, Split};
pub use error::{Error, Result};
pub use tokenize::Tokenizer;
