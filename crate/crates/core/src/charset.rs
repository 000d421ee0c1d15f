//! Share of vocabulary tokens that contain programming punctuation.

use alloc::borrow::Cow;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::percentage;
use crate::vocab::Vocabulary;

/// Brackets, operators and other punctuation found in source code.
pub const DEFAULT_SYMBOLS: &str = "{}[]()<>;:,.#@$%^&*+-=/\\|!?~`'\"";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolSetError {
    #[error("symbol set is empty")]
    Empty,
    #[error("symbol set may not contain alphanumeric character {0:?}")]
    Alphanumeric(char),
    #[error("symbol set may not contain a plain space")]
    Space,
    #[error("line {line}: expected exactly one character, got {text:?}")]
    BadLine { line: usize, text: String },
}

/// Characters that mark a token as programming-specific.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SymbolSet {
    chars: BTreeSet<char>,
}

impl SymbolSet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self, SymbolSetError> {
        let chars: BTreeSet<char> = chars.into_iter().collect();
        if chars.is_empty() {
            return Err(SymbolSetError::Empty);
        }
        if let Some(&c) = chars.iter().find(|c| c.is_alphanumeric()) {
            return Err(SymbolSetError::Alphanumeric(c));
        }
        if chars.contains(&' ') {
            return Err(SymbolSetError::Space);
        }
        Ok(Self { chars })
    }

    /// Parses a symbols file: one character per line, `\t`, `\n`, `\r` and
    /// `\\` escapes allowed. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, SymbolSetError> {
        let mut chars = Vec::new();
        for (i, raw) in text.split('\n').enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.is_empty() {
                continue;
            }
            let c = match line {
                "\\t" => '\t',
                "\\n" => '\n',
                "\\r" => '\r',
                "\\\\" => '\\',
                _ => {
                    let mut it = line.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => c,
                        _ => {
                            return Err(SymbolSetError::BadLine {
                                line: i + 1,
                                text: line.into(),
                            })
                        }
                    }
                }
            };
            chars.push(c);
        }
        Self::new(chars)
    }

    pub fn contains(&self, c: char) -> bool {
        self.chars.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.iter().copied()
    }

    /// Whether the (possibly non-UTF-8) byte string contains a symbol.
    pub fn matches_bytes(&self, bytes: &[u8]) -> bool {
        bytes
            .utf8_chunks()
            .any(|chunk| chunk.valid().chars().any(|c| self.contains(c)))
    }

    pub fn is_superset(&self, other: &SymbolSet) -> bool {
        self.chars.is_superset(&other.chars)
    }
}

impl Default for SymbolSet {
    fn default() -> Self {
        Self::new(DEFAULT_SYMBOLS.chars()).expect("default symbols are valid")
    }
}

impl From<SymbolSet> for String {
    fn from(set: SymbolSet) -> Self {
        set.chars.into_iter().collect()
    }
}

impl TryFrom<String> for SymbolSet {
    type Error = SymbolSetError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value.chars())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharsetResult {
    pub vocab_name: String,
    pub matching: usize,
    pub total: usize,
    pub percentage: f64,
}

/// Counts non-added vocabulary entries whose decoded bytes contain a symbol.
pub fn special_char_proportion(vocab: &Vocabulary, symbols: &SymbolSet) -> CharsetResult {
    let (matching, total) = vocab
        .entries()
        .filter(|t| !t.added)
        .fold((0, 0), |(matching, total), t| {
            (matching + symbols.matches_bytes(&t.bytes) as usize, total + 1)
        });
    CharsetResult {
        vocab_name: vocab.name().into(),
        matching,
        total,
        percentage: percentage(matching, total),
    }
}

/// Published token counts for the three tokenizer families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCount {
    pub tokenizer: Cow<'static, str>,
    pub matching: usize,
    pub total: usize,
    pub percentage: f64,
}

pub const REFERENCE_COUNTS: [ReferenceCount; 3] = [
    ReferenceCount {
        tokenizer: Cow::Borrowed("Llama"),
        matching: 18_719,
        total: 128_000,
        percentage: 14.6,
    },
    ReferenceCount {
        tokenizer: Cow::Borrowed("DeepSeek-V3"),
        matching: 6_585,
        total: 128_000,
        percentage: 5.1,
    },
    ReferenceCount {
        tokenizer: Cow::Borrowed("Qwen2.5"),
        matching: 18_454,
        total: 151_643,
        percentage: 12.1,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{entries_from, BYTE_LEVEL};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn default_set_is_valid() {
        let set = SymbolSet::default();
        assert_eq!(set.len(), 31);
        assert!(!set.contains('\t') && !set.contains('_'));
    }

    #[test]
    fn rejects_bad_sets() {
        assert_eq!(SymbolSet::new([]), Err(SymbolSetError::Empty));
        assert_eq!(SymbolSet::new(['(', 'a']), Err(SymbolSetError::Alphanumeric('a')));
        assert_eq!(SymbolSet::new([' ']), Err(SymbolSetError::Space));
    }

    #[test]
    fn parses_symbol_files_with_escapes() {
        let set = SymbolSet::parse("(\n)\n\\t\n\\n\n\n#\r\n").unwrap();
        assert_eq!(set.iter().collect::<String>(), "\t\n#()");
        assert!(matches!(
            SymbolSet::parse("ab\n"),
            Err(SymbolSetError::BadLine { line: 1, .. })
        ));
    }

    #[test]
    fn no_symbols_no_matches() {
        let v = Vocabulary::from_parts("x", entries_from([("abc", 0), ("def", 1)]), vec![]).unwrap();
        let r = special_char_proportion(&v, &SymbolSet::default());
        assert_eq!((r.matching, r.total, r.percentage), (0, 2, 0.0));
    }

    #[test]
    fn decoded_whitespace_needs_explicit_symbols() {
        let v = Vocabulary::from_parts("x", entries_from([("ĉ", 0), ("Ġ(", 1), ("a", 2)]), vec![]).unwrap();
        assert_eq!(special_char_proportion(&v, &SymbolSet::default()).matching, 1);
        let with_tab = SymbolSet::new(DEFAULT_SYMBOLS.chars().chain(['\t'])).unwrap();
        assert_eq!(special_char_proportion(&v, &with_tab).matching, 2);
    }

    #[test]
    fn added_tokens_are_not_counted() {
        let v = Vocabulary::from_parts(
            "x",
            entries_from([("<s>", 0), ("(", 1)]),
            vec![(0, "<s>".into()), (2, "<|eot|>".into())],
        )
        .unwrap();
        let r = special_char_proportion(&v, &SymbolSet::default());
        assert_eq!((r.matching, r.total), (1, 1));
    }

    fn arb_vocab() -> impl Strategy<Value = Vocabulary> {
        proptest::collection::btree_set(proptest::collection::vec(any::<u8>(), 1..6), 1..60).prop_map(|set| {
            let entries = set
                .into_iter()
                .enumerate()
                .map(|(i, bytes)| (BYTE_LEVEL.encode(&bytes), i as u32))
                .collect();
            Vocabulary::from_parts("arb", entries, vec![]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn enlarging_the_set_never_decreases_matches(v in arb_vocab(), extra in "[!-/:-@\\[-`{-~]{1,5}") {
            let base = SymbolSet::new("()".chars()).unwrap();
            let bigger = SymbolSet::new("()".chars().chain(extra.chars())).unwrap();
            prop_assert!(bigger.is_superset(&base));
            let a = special_char_proportion(&v, &base);
            let b = special_char_proportion(&v, &bigger);
            prop_assert!(b.matching >= a.matching);
            prop_assert!((b.percentage - 100.0 * b.matching as f64 / b.total as f64).abs() <= 0.05 + 1e-9);
        }
    }
}
