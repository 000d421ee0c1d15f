//! Token classes used by the cold-start metrics.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{TokenId, VocabError, Vocabulary};
use crate::charset::SymbolSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    ProgrammingKeyword,
    SpecialToken,
    NaturalWord,
    Formatting,
    Other,
}

impl TokenClass {
    pub const ALL: [TokenClass; 5] = [
        TokenClass::ProgrammingKeyword,
        TokenClass::SpecialToken,
        TokenClass::NaturalWord,
        TokenClass::Formatting,
        TokenClass::Other,
    ];

    const fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenClass::ProgrammingKeyword => "programming_keyword",
            TokenClass::SpecialToken => "special_token",
            TokenClass::NaturalWord => "natural_word",
            TokenClass::Formatting => "formatting",
            TokenClass::Other => "other",
        })
    }
}

/// A set of [`TokenClass`] flags.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ClassSet(u8);

impl ClassSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    pub const fn only(class: TokenClass) -> Self {
        Self(class.bit())
    }

    pub fn insert(&mut self, class: TokenClass) {
        self.0 |= class.bit();
    }

    pub const fn contains(self, class: TokenClass) -> bool {
        self.0 & class.bit() != 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = TokenClass> {
        TokenClass::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<TokenClass> for ClassSet {
    fn from_iter<I: IntoIterator<Item = TokenClass>>(iter: I) -> Self {
        let mut set = Self::empty();
        iter.into_iter().for_each(|c| set.insert(c));
        set
    }
}

impl fmt::Debug for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for ClassSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ClassSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Vec::<TokenClass>::deserialize(deserializer)?.into_iter().collect())
    }
}

/// Assigns [`TokenClass`] flags to decoded tokens.
///
/// Matching for keywords and natural words ignores exactly one leading space,
/// so `Ġdef` counts as `def`. Added/control tokens are always `Other`.
#[derive(Debug, Clone)]
pub struct Classifier {
    keywords: BTreeSet<Vec<u8>>,
    natural_words: BTreeSet<String>,
    symbols: SymbolSet,
}

/// Longest run of alphanumeric chars a special token may contain (`%c`, `#!/`).
pub const MAX_SPECIAL_ALNUM_RUN: usize = 2;

impl Classifier {
    pub fn new<K, W>(keywords: K, natural_words: W, symbols: SymbolSet) -> Self
    where
        K: IntoIterator,
        K::Item: AsRef<str>,
        W: IntoIterator,
        W::Item: AsRef<str>,
    {
        Self {
            keywords: keywords
                .into_iter()
                .map(|k| k.as_ref().as_bytes().to_vec())
                .collect(),
            natural_words: natural_words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
            symbols,
        }
    }

    /// Bundled keyword union, natural-word list and default symbol set.
    pub fn with_defaults() -> Self {
        let sets = crate::keywords::bundled_keyword_sets();
        Self::new(
            crate::keywords::keyword_union(&sets),
            crate::coldstart::bundled_natural_words(),
            SymbolSet::default(),
        )
    }

    pub fn keyword_count(&self) -> usize {
        self.keywords.len()
    }

    pub fn natural_word_count(&self) -> usize {
        self.natural_words.len()
    }

    pub fn symbols(&self) -> &SymbolSet {
        &self.symbols
    }

    /// Classes of a content token with the given decoded bytes.
    pub fn classify_bytes(&self, bytes: &[u8]) -> ClassSet {
        let mut classes = ClassSet::empty();
        let stripped = strip_single_space(bytes);

        let keyword = self.keywords.contains(stripped);
        if keyword {
            classes.insert(TokenClass::ProgrammingKeyword);
        }
        if !self.natural_words.is_empty() {
            let lowered = String::from_utf8_lossy(stripped).to_lowercase();
            if self.natural_words.contains(&lowered) {
                classes.insert(TokenClass::NaturalWord);
            }
        }
        let formatting = is_formatting(bytes);
        if formatting {
            classes.insert(TokenClass::Formatting);
        }
        if !keyword
            && (formatting
                || (self.symbols.matches_bytes(bytes)
                    && longest_alphanumeric_run(bytes) <= MAX_SPECIAL_ALNUM_RUN))
        {
            classes.insert(TokenClass::SpecialToken);
        }
        if classes.is_empty() {
            classes.insert(TokenClass::Other);
        }
        classes
    }

    pub fn classify(&self, vocab: &Vocabulary, id: TokenId) -> Result<ClassSet, VocabError> {
        let token = vocab.token(id).ok_or(VocabError::UnknownToken(id))?;
        if token.added {
            Ok(ClassSet::only(TokenClass::Other))
        } else {
            Ok(self.classify_bytes(&token.bytes))
        }
    }

    /// Classifies every addressable token of `vocab` once.
    pub fn index<'v>(&self, vocab: &'v Vocabulary) -> ClassIndex<'v> {
        let classes: Vec<ClassSet> = vocab
            .tokens()
            .iter()
            .map(|t| {
                if t.added {
                    ClassSet::only(TokenClass::Other)
                } else {
                    self.classify_bytes(&t.bytes)
                }
            })
            .collect();
        let mut counts = [0usize; 5];
        for set in &classes {
            for class in set.iter() {
                counts[class as usize] += 1;
            }
        }
        ClassIndex {
            vocab,
            classes,
            counts,
            keyword_strings: self.keywords.len(),
        }
    }
}

/// Per-token classes for one vocabulary.
#[derive(Debug, Clone)]
pub struct ClassIndex<'v> {
    vocab: &'v Vocabulary,
    classes: Vec<ClassSet>,
    counts: [usize; 5],
    keyword_strings: usize,
}

impl<'v> ClassIndex<'v> {
    pub fn vocab(&self) -> &'v Vocabulary {
        self.vocab
    }

    pub fn classes(&self, id: TokenId) -> Option<ClassSet> {
        self.vocab.position(id).map(|i| self.classes[i])
    }

    pub fn is(&self, id: TokenId, class: TokenClass) -> bool {
        self.classes(id).is_some_and(|c| c.contains(class))
    }

    /// Number of token ids carrying `class`.
    pub fn count(&self, class: TokenClass) -> usize {
        self.counts[class as usize]
    }

    /// Size of the keyword union the classifier was built with.
    pub fn keyword_strings(&self) -> usize {
        self.keyword_strings
    }

    /// `(id, classes)` for every addressable token, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (TokenId, ClassSet)> + '_ {
        self.vocab
            .tokens()
            .iter()
            .zip(&self.classes)
            .map(|(t, c)| (t.id, *c))
    }
}

fn strip_single_space(bytes: &[u8]) -> &[u8] {
    match bytes {
        [b' ', rest @ ..] if rest.first() != Some(&b' ') => rest,
        _ => bytes,
    }
}

fn is_formatting(bytes: &[u8]) -> bool {
    !bytes.is_empty() && bytes.iter().all(|b| matches!(b, b' ' | b'\t' | b'\n' | b'\r'))
}

fn longest_alphanumeric_run(bytes: &[u8]) -> usize {
    let mut longest = 0;
    let mut run = 0;
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            if c.is_alphanumeric() {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        if !chunk.invalid().is_empty() {
            run = 0;
        }
    }
    longest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::entries_from;
    use alloc::vec;

    fn classifier() -> Classifier {
        Classifier::new(["def", "import", "if", "yield from"], ["the", "and", "if"], SymbolSet::default())
    }

    fn classes_of(surface: &str) -> ClassSet {
        let v = Vocabulary::from_parts("x", entries_from([(surface, 0)]), vec![]).unwrap();
        classifier().classify(&v, 0).unwrap()
    }

    #[test]
    fn space_prefixed_keyword() {
        assert_eq!(classes_of("Ġdef"), ClassSet::only(TokenClass::ProgrammingKeyword));
        assert_eq!(classes_of("def"), ClassSet::only(TokenClass::ProgrammingKeyword));
        assert_eq!(classes_of("ĠĠdef"), ClassSet::only(TokenClass::Other));
    }

    #[test]
    fn whitespace_tokens_are_formatting_and_special() {
        let expected: ClassSet = [TokenClass::Formatting, TokenClass::SpecialToken].into_iter().collect();
        assert_eq!(classes_of("ĊĊ"), expected);
        assert_eq!(classes_of("ĉ"), expected);
        assert_eq!(classes_of("ĠĠĠĠ"), expected);
    }

    #[test]
    fn punctuation_tokens_are_special() {
        for s in ["**", "#", "//", "%c", "#!/", "Ġ(", ")ĊĊ", "\u{00ef}\u{00bc}\u{013c}<", "/*"] {
            assert_eq!(classes_of(s), ClassSet::only(TokenClass::SpecialToken), "{s}");
        }
    }

    #[test]
    fn identifiers_with_symbols_are_not_special() {
        assert_eq!(classes_of(".get"), ClassSet::only(TokenClass::Other));
        assert_eq!(classes_of("#include"), ClassSet::only(TokenClass::Other));
    }

    #[test]
    fn natural_words_ignore_case() {
        assert_eq!(classes_of("ĠThe"), ClassSet::only(TokenClass::NaturalWord));
        let both: ClassSet = [TokenClass::ProgrammingKeyword, TokenClass::NaturalWord].into_iter().collect();
        assert_eq!(classes_of("Ġif"), both);
    }

    #[test]
    fn added_tokens_are_other() {
        let v = Vocabulary::from_parts("x", entries_from([("def", 0)]), vec![(0, "def".into())]).unwrap();
        assert_eq!(classifier().classify(&v, 0).unwrap(), ClassSet::only(TokenClass::Other));
        assert_eq!(classifier().classify(&v, 9), Err(VocabError::UnknownToken(9)));
    }

    #[test]
    fn index_counts_classes() {
        let v = Vocabulary::from_parts(
            "x",
            entries_from([("def", 0), ("Ġdef", 1), ("**", 2), ("Ġthe", 3), ("cat", 4)]),
            vec![(5, "<|eot|>".into())],
        )
        .unwrap();
        let index = classifier().index(&v);
        assert_eq!(index.count(TokenClass::ProgrammingKeyword), 2);
        assert_eq!(index.count(TokenClass::SpecialToken), 1);
        assert_eq!(index.count(TokenClass::NaturalWord), 1);
        assert_eq!(index.count(TokenClass::Other), 2);
        assert!(index.is(5, TokenClass::Other));
    }

    #[test]
    fn class_set_serializes_as_a_list() {
        let set: ClassSet = [TokenClass::SpecialToken, TokenClass::Formatting].into_iter().collect();
        assert_eq!(alloc::format!("{set:?}"), "{SpecialToken, Formatting}");
    }
}
