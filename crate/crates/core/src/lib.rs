//! Analysis core for tokenizer vocabularies and first-token probability dumps.
//!
//! Everything in this crate is pure computation over in-memory data and builds
//! without `std`. Reading files, parsing JSON and rendering reports live in the
//! `tokscope` crate.
//!
//! The pieces, bottom-up:
//!
//! - [`vocab`]: byte-level codec, [`Vocabulary`](vocab::Vocabulary) and token
//!   classification.
//! - [`keywords`]: the bundled reserved-keyword datasets, coverage and rank
//!   statistics.
//! - [`charset`]: share of tokens containing programming punctuation.
//! - [`coldstart`]: first-token distributions and the keyword / special-token /
//!   natural-language probability metrics.
//! - [`compare`]: per-model comparison tables, distillation deltas and
//!   quantization sweeps.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod charset;
pub mod coldstart;
pub mod compare;
pub mod keywords;
mod math;
pub mod vocab;

pub use charset::{CharsetResult, SymbolSet};
pub use coldstart::{ColdStartDistribution, MetricsReport};
pub use keywords::{KeywordSet, Language, MatchMode};
pub use vocab::{ByteCodec, Classifier, TokenClass, TokenId, Vocabulary};
