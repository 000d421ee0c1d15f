//! Reserved-keyword datasets and their coverage in a vocabulary.
//!
//! Twelve languages and frameworks are bundled, one plain-text file each
//! (`data/keywords/<lowercased name>`): one keyword per line, `#` comment lines
//! ignored. The loaders refuse a dataset whose size differs from the expected
//! count so that results stay comparable across runs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::percentage;
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeywordError {
    #[error("no dataset for {0}")]
    MissingDataset(Language),
    #[error("{language} dataset has {found} keywords, expected {expected}")]
    CardinalityMismatch {
        language: Language,
        expected: usize,
        found: usize,
    },
    #[error("{language} dataset line {line}: {reason}")]
    InvalidKeyword {
        language: Language,
        line: usize,
        reason: &'static str,
    },
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("no keyword is present in the vocabulary")]
    EmptyPresence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Language {
    C,
    CSharp,
    TypeScript,
    Ruby,
    Php,
    Rust,
    JavaScript,
    Java,
    Python,
    Go,
    React,
    Cpp,
}

impl Language {
    /// All bundled languages, in report order.
    pub const ALL: [Language; 12] = [
        Language::C,
        Language::CSharp,
        Language::TypeScript,
        Language::Ruby,
        Language::Php,
        Language::Rust,
        Language::JavaScript,
        Language::Java,
        Language::Python,
        Language::Go,
        Language::React,
        Language::Cpp,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::CSharp => "C#",
            Language::TypeScript => "TypeScript",
            Language::Ruby => "Ruby",
            Language::Php => "PHP",
            Language::Rust => "Rust",
            Language::JavaScript => "JavaScript",
            Language::Java => "Java",
            Language::Python => "Python",
            Language::Go => "Go",
            Language::React => "React",
            Language::Cpp => "C++",
        }
    }

    /// Dataset file name: the lowercased language name.
    pub const fn file_name(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::CSharp => "c#",
            Language::TypeScript => "typescript",
            Language::Ruby => "ruby",
            Language::Php => "php",
            Language::Rust => "rust",
            Language::JavaScript => "javascript",
            Language::Java => "java",
            Language::Python => "python",
            Language::Go => "go",
            Language::React => "react",
            Language::Cpp => "c++",
        }
    }

    /// Number of keywords the dataset must contain.
    pub const fn expected_count(self) -> usize {
        match self {
            Language::C => 59,
            Language::CSharp => 77,
            Language::TypeScript => 46,
            Language::Ruby => 41,
            Language::Php => 62,
            Language::Rust => 51,
            Language::JavaScript => 46,
            Language::Java => 51,
            Language::Python => 35,
            Language::Go => 25,
            Language::React => 30,
            Language::Cpp => 93,
        }
    }

    const fn bundled_text(self) -> &'static str {
        match self {
            Language::C => include_str!("../data/keywords/c"),
            Language::CSharp => include_str!("../data/keywords/c#"),
            Language::TypeScript => include_str!("../data/keywords/typescript"),
            Language::Ruby => include_str!("../data/keywords/ruby"),
            Language::Php => include_str!("../data/keywords/php"),
            Language::Rust => include_str!("../data/keywords/rust"),
            Language::JavaScript => include_str!("../data/keywords/javascript"),
            Language::Java => include_str!("../data/keywords/java"),
            Language::Python => include_str!("../data/keywords/python"),
            Language::Go => include_str!("../data/keywords/go"),
            Language::React => include_str!("../data/keywords/react"),
            Language::Cpp => include_str!("../data/keywords/c++"),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = KeywordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s) || l.file_name() == s)
            .ok_or_else(|| KeywordError::UnknownLanguage(s.into()))
    }
}

impl Serialize for Language {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Language {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One language's reserved keywords, in dataset order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub language: Language,
    keywords: Vec<String>,
}

impl KeywordSet {
    /// Builds a set, validating each keyword.
    ///
    /// Keywords must be unique and non-empty, with no leading, trailing or
    /// repeated whitespace. Multi-word keywords such as `yield from` keep their
    /// single inner space.
    pub fn new(language: Language, keywords: Vec<String>) -> Result<Self, KeywordError> {
        let mut seen = BTreeSet::new();
        for (i, k) in keywords.iter().enumerate() {
            let invalid = |reason| KeywordError::InvalidKeyword {
                language,
                line: i + 1,
                reason,
            };
            if k.is_empty() {
                return Err(invalid("empty keyword"));
            }
            if k.trim() != k || k.contains("  ") || k.chars().any(|c| c.is_whitespace() && c != ' ') {
                return Err(invalid("keyword has stray whitespace"));
            }
            if !seen.insert(k.as_str()) {
                return Err(invalid("duplicate keyword"));
            }
        }
        Ok(Self { language, keywords })
    }

    /// Parses the dataset file format.
    pub fn parse(language: Language, text: &str) -> Result<Self, KeywordError> {
        let mut keywords = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if line.trim() != line {
                return Err(KeywordError::InvalidKeyword {
                    language,
                    line: i + 1,
                    reason: "keyword has stray whitespace",
                });
            }
            keywords.push(line.to_string());
        }
        Self::new(language, keywords)
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Fails unless the set has the expected number of keywords.
    pub fn check_cardinality(&self) -> Result<(), KeywordError> {
        let expected = self.language.expected_count();
        if self.len() == expected {
            Ok(())
        } else {
            Err(KeywordError::CardinalityMismatch {
                language: self.language,
                expected,
                found: self.len(),
            })
        }
    }
}

/// Loads all twelve sets through `source`, which returns a dataset's text or
/// `None` when it is missing.
pub fn load_keyword_sets<F>(mut source: F) -> Result<Vec<KeywordSet>, KeywordError>
where
    F: FnMut(Language) -> Option<String>,
{
    Language::ALL
        .into_iter()
        .map(|language| {
            let text = source(language).ok_or(KeywordError::MissingDataset(language))?;
            let set = KeywordSet::parse(language, &text)?;
            set.check_cardinality()?;
            Ok(set)
        })
        .collect()
}

/// The bundled datasets.
pub fn bundled_keyword_sets() -> Vec<KeywordSet> {
    load_keyword_sets(|l| Some(l.bundled_text().into())).expect("bundled keyword datasets are valid")
}

/// Raw text of a bundled dataset.
pub fn bundled_dataset(language: Language) -> &'static str {
    language.bundled_text()
}

/// Deduplicated union of all keywords.
pub fn keyword_union(sets: &[KeywordSet]) -> BTreeSet<String> {
    sets.iter()
        .flat_map(|s| s.keywords.iter().cloned())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Only the keyword itself must be a token.
    #[default]
    BareOnly,
    /// The keyword or its single-space-prefixed form must be a token.
    BareOrPrefixed,
}

impl MatchMode {
    pub fn other(self) -> Self {
        match self {
            MatchMode::BareOnly => MatchMode::BareOrPrefixed,
            MatchMode::BareOrPrefixed => MatchMode::BareOnly,
        }
    }
}

/// Which surface forms of a keyword are tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantMatch {
    Bare,
    Prefixed,
    Both,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordVariant {
    pub keyword: String,
    pub matched: VariantMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub language: Language,
    pub match_mode: MatchMode,
    pub total: usize,
    pub present: usize,
    pub percentage: f64,
    /// Absent keywords, sorted.
    pub missing: Vec<String>,
    pub variant_detail: Vec<KeywordVariant>,
}

/// Token ids of the bare and space-prefixed forms of `keyword`.
fn lookup(vocab: &Vocabulary, keyword: &str) -> (Option<TokenId>, Option<TokenId>) {
    let bare = vocab.id_of_bytes(keyword.as_bytes());
    let prefixed = if keyword.contains(' ') {
        None
    } else {
        let mut spaced = Vec::with_capacity(keyword.len() + 1);
        spaced.push(b' ');
        spaced.extend_from_slice(keyword.as_bytes());
        vocab.id_of_bytes(&spaced)
    };
    (bare, prefixed)
}

pub fn coverage(vocab: &Vocabulary, set: &KeywordSet, mode: MatchMode) -> CoverageResult {
    let mut missing = Vec::new();
    let mut variant_detail = Vec::with_capacity(set.len());
    for keyword in &set.keywords {
        let matched = match lookup(vocab, keyword) {
            (Some(_), Some(_)) => VariantMatch::Both,
            (Some(_), None) => VariantMatch::Bare,
            (None, Some(_)) => VariantMatch::Prefixed,
            (None, None) => VariantMatch::None,
        };
        let present = match mode {
            MatchMode::BareOnly => matches!(matched, VariantMatch::Bare | VariantMatch::Both),
            MatchMode::BareOrPrefixed => matched != VariantMatch::None,
        };
        if !present {
            missing.push(keyword.clone());
        }
        variant_detail.push(KeywordVariant {
            keyword: keyword.clone(),
            matched,
        });
    }
    missing.sort();
    let total = set.len();
    let present = total - missing.len();
    CoverageResult {
        language: set.language,
        match_mode: mode,
        total,
        present,
        percentage: percentage(present, total),
        missing,
        variant_detail,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRankResult {
    pub keyword: String,
    pub languages: Vec<Language>,
    pub rank_bare: Option<usize>,
    pub rank_prefixed: Option<usize>,
    pub min_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    /// Keywords with at least one form present.
    pub present: usize,
    pub mean_min_rank: f64,
    pub median_min_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRanks {
    pub vocab_name: String,
    pub records: Vec<KeywordRankResult>,
    /// Absent when no keyword is present.
    pub summary: Option<RankSummary>,
}

impl KeywordRanks {
    pub fn summary(&self) -> Result<&RankSummary, KeywordError> {
        self.summary.as_ref().ok_or(KeywordError::EmptyPresence)
    }
}

/// Ranks of every keyword in the union of `sets`, in keyword order.
pub fn keyword_ranks(vocab: &Vocabulary, sets: &[KeywordSet]) -> KeywordRanks {
    let mut by_keyword: BTreeMap<&str, Vec<Language>> = BTreeMap::new();
    for set in sets {
        for k in &set.keywords {
            let langs = by_keyword.entry(k.as_str()).or_default();
            if !langs.contains(&set.language) {
                langs.push(set.language);
            }
        }
    }
    let records: Vec<KeywordRankResult> = by_keyword
        .into_iter()
        .map(|(keyword, languages)| {
            let (bare, prefixed) = lookup(vocab, keyword);
            let rank = |id: Option<TokenId>| id.and_then(|id| vocab.rank_of(id).ok());
            let (rank_bare, rank_prefixed) = (rank(bare), rank(prefixed));
            KeywordRankResult {
                keyword: keyword.into(),
                languages,
                rank_bare,
                rank_prefixed,
                min_rank: rank_bare.into_iter().chain(rank_prefixed).min(),
            }
        })
        .collect();
    let summary = rank_summary(&records).ok();
    KeywordRanks {
        vocab_name: vocab.name().into(),
        records,
        summary,
    }
}

pub fn rank_summary(records: &[KeywordRankResult]) -> Result<RankSummary, KeywordError> {
    let mut ranks: Vec<usize> = records.iter().filter_map(|r| r.min_rank).collect();
    if ranks.is_empty() {
        return Err(KeywordError::EmptyPresence);
    }
    ranks.sort_unstable();
    let n = ranks.len();
    let mean = ranks.iter().map(|&r| r as f64).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        ranks[n / 2] as f64
    } else {
        (ranks[n / 2 - 1] + ranks[n / 2]) as f64 / 2.0
    };
    Ok(RankSummary {
        present: n,
        mean_min_rank: mean,
        median_min_rank: median,
    })
}
