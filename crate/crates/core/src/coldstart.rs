//! First-token ("cold start") probability distributions and the metrics
//! computed over them.
//!
//! A distribution lists `(token id, probability)` pairs for the first position
//! of a model given no prompt. Dumps may be dense (every id) or sparse (top-K),
//! in which case the unlisted mass is kept as `residual_mass` and every
//! cumulative metric is a lower bound.
//!
//! | metric | meaning |
//! |--------|---------|
//! | `pkp`  | mass on programming-keyword tokens |
//! | `stp`  | mass on special (punctuation / whitespace) tokens |
//! | `kap`  | `pkp` over the number of keyword token ids in the vocabulary |
//! | `stap` | `stp` over the number of special token ids |
//! | `nlp`  | mass on common English word tokens |

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{ClassIndex, TokenClass, TokenId, Vocabulary};

/// Allowed deviation of total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("dump declares vocab_size {declared}, smaller than the vocabulary's {size} entries ({id_space} ids with added tokens)")]
    VocabMismatch {
        declared: usize,
        size: usize,
        id_space: usize,
    },
    #[error("total probability mass {total} is outside 1 ± {MASS_TOLERANCE}")]
    MassViolation { total: f64 },
    #[error("probability {probability} of token {id} is outside [0, 1]")]
    OutOfRangeProbability { id: u64, probability: f64 },
    #[error("token {0} is not in the vocabulary")]
    UnknownToken(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("the vocabulary has no keyword tokens")]
    NoKeywordTokens,
    #[error("the vocabulary has no special tokens")]
    NoSpecialTokens,
    #[error("top-k needs k >= 1")]
    ZeroK,
    #[error("temperature must be positive")]
    NonPositiveTemperature,
    #[error("temperature rescaling needs a dense distribution")]
    SparseDistribution,
}

/// A distribution as read from a dump, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDistribution {
    pub model_id: String,
    pub vocab_size: usize,
    pub temperature: f64,
    pub dense: bool,
    pub entries: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartDistribution {
    model_id: String,
    vocab_ref: String,
    entries: Vec<(TokenId, f64)>,
    residual_mass: f64,
    temperature_applied: f64,
    /// Listed mass exceeded 1 by less than the tolerance and the residual was
    /// clamped to zero.
    mass_clamped: bool,
}

impl RawDistribution {
    /// Every violation of the dump contract. `vocab` enables the vocabulary
    /// checks; without it only schema, range and mass are checked.
    pub fn violations(&self, vocab: Option<&Vocabulary>) -> Vec<DistributionError> {
        let mut out = Vec::new();
        if self.model_id.is_empty() {
            out.push(DistributionError::SchemaViolation("model_id is empty".into()));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            out.push(DistributionError::SchemaViolation(alloc::format!(
                "temperature {} is not positive",
                self.temperature
            )));
        }
        for pair in self.entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                out.push(DistributionError::SchemaViolation(alloc::format!(
                    "duplicate id {}",
                    pair[0].0
                )));
            } else if pair[0].0 > pair[1].0 {
                out.push(DistributionError::SchemaViolation(alloc::format!(
                    "entries not sorted by id at {}",
                    pair[1].0
                )));
            }
        }
        for &(id, p) in &self.entries {
            if !(0.0..=1.0).contains(&p) {
                out.push(DistributionError::OutOfRangeProbability { id, probability: p });
            }
            if id as usize >= self.vocab_size {
                out.push(DistributionError::SchemaViolation(alloc::format!(
                    "id {id} is outside the declared vocab_size {}",
                    self.vocab_size
                )));
            }
        }
        if let Some(vocab) = vocab {
            // Logit rows are often padded past the tokenizer's id space.
            if self.vocab_size < vocab.size() {
                out.push(DistributionError::VocabMismatch {
                    declared: self.vocab_size,
                    size: vocab.size(),
                    id_space: vocab.id_space(),
                });
            }
            for &(id, _) in &self.entries {
                if u32::try_from(id).map_or(true, |id| !vocab.contains(id)) {
                    out.push(DistributionError::UnknownToken(id));
                }
            }
        }
        let total = self.listed_mass();
        let mass_ok = if self.dense {
            (total - 1.0).abs() <= MASS_TOLERANCE
        } else {
            total <= 1.0 + MASS_TOLERANCE
        };
        if !mass_ok || !total.is_finite() {
            out.push(DistributionError::MassViolation { total });
        }
        out
    }

    fn listed_mass(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

impl ColdStartDistribution {
    /// Validates a raw dump against `vocab`, reporting the first violation.
    pub fn from_raw(raw: RawDistribution, vocab: &Vocabulary) -> Result<Self, DistributionError> {
        if let Some(err) = raw.violations(Some(vocab)).into_iter().next() {
            return Err(err);
        }
        let total = raw.listed_mass();
        let (residual_mass, mass_clamped) = if raw.dense {
            (0.0, false)
        } else if total > 1.0 {
            (0.0, true)
        } else {
            (1.0 - total, false)
        };
        Ok(Self {
            model_id: raw.model_id,
            vocab_ref: vocab.name().to_string(),
            entries: raw.entries.into_iter().map(|(id, p)| (id as TokenId, p)).collect(),
            residual_mass,
            temperature_applied: raw.temperature,
            mass_clamped,
        })
    }

    /// Shorthand for fixtures: validated distribution from id-sorted entries.
    pub fn new(
        model_id: impl Into<String>,
        vocab: &Vocabulary,
        entries: Vec<(TokenId, f64)>,
        dense: bool,
    ) -> Result<Self, DistributionError> {
        Self::from_raw(
            RawDistribution {
                model_id: model_id.into(),
                vocab_size: vocab.id_space(),
                temperature: 1.0,
                dense,
                entries: entries.into_iter().map(|(id, p)| (id as u64, p)).collect(),
            },
            vocab,
        )
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn vocab_ref(&self) -> &str {
        &self.vocab_ref
    }

    pub fn entries(&self) -> &[(TokenId, f64)] {
        &self.entries
    }

    pub fn probability(&self, id: TokenId) -> f64 {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }

    pub fn temperature_applied(&self) -> f64 {
        self.temperature_applied
    }

    pub fn mass_clamped(&self) -> bool {
        self.mass_clamped
    }

    pub fn is_dense(&self) -> bool {
        self.residual_mass == 0.0
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() + self.residual_mass
    }

    /// Id with the highest probability, lowest id on ties.
    pub fn argmax(&self) -> Option<TokenId> {
        self.entries
            .iter()
            .fold(None, |best: Option<(TokenId, f64)>, &(id, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((id, p)),
            })
            .map(|(id, _)| id)
    }

    /// Keeps the `k` most probable entries, moving the rest into the residual.
    pub fn truncate_top_k(&self, k: usize) -> Self {
        let mut ranked = self.entries.clone();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked.sort_unstable_by_key(|e| e.0);
        let kept: f64 = ranked.iter().map(|e| e.1).sum();
        Self {
            model_id: self.model_id.clone(),
            vocab_ref: self.vocab_ref.clone(),
            entries: ranked,
            residual_mass: (self.total_mass() - kept).max(0.0),
            temperature_applied: self.temperature_applied,
            mass_clamped: false,
        }
    }
}

/// Sum of probabilities over ids carrying `class`.
pub fn class_mass(dist: &ColdStartDistribution, index: &ClassIndex<'_>, class: TokenClass) -> f64 {
    dist.entries
        .iter()
        .filter(|&&(id, _)| index.is(id, class))
        .map(|&(_, p)| p)
        .sum()
}

pub fn compute_pkp(dist: &ColdStartDistribution, index: &ClassIndex<'_>) -> f64 {
    class_mass(dist, index, TokenClass::ProgrammingKeyword)
}

pub fn compute_stp(dist: &ColdStartDistribution, index: &ClassIndex<'_>) -> f64 {
    class_mass(dist, index, TokenClass::SpecialToken)
}

pub fn compute_nlp(dist: &ColdStartDistribution, index: &ClassIndex<'_>) -> f64 {
    class_mass(dist, index, TokenClass::NaturalWord)
}

/// `pkp` divided by the number of keyword-classified ids in the vocabulary,
/// zero-probability ones included.
pub fn compute_kap(dist: &ColdStartDistribution, index: &ClassIndex<'_>) -> Result<f64, MetricError> {
    match index.count(TokenClass::ProgrammingKeyword) {
        0 => Err(MetricError::NoKeywordTokens),
        n => Ok(compute_pkp(dist, index) / n as f64),
    }
}

pub fn compute_stap(dist: &ColdStartDistribution, index: &ClassIndex<'_>) -> Result<f64, MetricError> {
    match index.count(TokenClass::SpecialToken) {
        0 => Err(MetricError::NoSpecialTokens),
        n => Ok(compute_stp(dist, index) / n as f64),
    }
}

/// Mass on added/control tokens, which no metric class covers.
pub fn control_mass(dist: &ColdStartDistribution, vocab: &Vocabulary) -> f64 {
    dist.entries
        .iter()
        .filter(|&&(id, _)| vocab.is_added(id))
        .map(|&(_, p)| p)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopToken {
    pub id: TokenId,
    /// Decoded text of the token.
    pub token: String,
    /// Surface as stored in the vocabulary file.
    pub surface: String,
    pub probability: f64,
}

/// The `k` most probable ids of `class`, by descending probability and then
/// ascending id.
pub fn top_k_by_class(
    dist: &ColdStartDistribution,
    index: &ClassIndex<'_>,
    class: TokenClass,
    k: usize,
) -> Result<Vec<TopToken>, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    let mut members: Vec<(TokenId, f64)> = dist
        .entries
        .iter()
        .copied()
        .filter(|&(id, _)| index.is(id, class))
        .collect();
    members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    members.truncate(k);
    let vocab = index.vocab();
    Ok(members
        .into_iter()
        .map(|(id, probability)| {
            let token = vocab.token(id);
            TopToken {
                id,
                token: token.map(|t| t.text()).unwrap_or_default(),
                surface: token.map(|t| t.surface.clone()).unwrap_or_default(),
                probability,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormattingProb {
    /// Id of the single token with exactly this text, if the vocabulary has one.
    pub token_id: Option<TokenId>,
    pub probability: f64,
    /// False when the text is not a single token (probability is then 0).
    pub present: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormattingProbs {
    pub tab: FormattingProb,
    pub newline: FormattingProb,
    pub two_spaces: FormattingProb,
    pub four_spaces: FormattingProb,
}

pub fn formatting_probs(dist: &ColdStartDistribution, vocab: &Vocabulary) -> FormattingProbs {
    let lookup = |text: &[u8]| {
        let token_id = vocab.id_of_bytes(text);
        FormattingProb {
            token_id,
            probability: token_id.map_or(0.0, |id| dist.probability(id)),
            present: token_id.is_some(),
        }
    };
    FormattingProbs {
        tab: lookup(b"\t"),
        newline: lookup(b"\n"),
        two_spaces: lookup(b"  "),
        four_spaces: lookup(b"    "),
    }
}

/// Rescales a dense distribution: `p'_i = p_i^(1/T) / sum_j p_j^(1/T)`.
///
/// Computed in log space relative to the largest probability, so small
/// temperatures saturate to the argmax instead of underflowing.
pub fn apply_temperature(dist: &ColdStartDistribution, temperature: f64) -> Result<ColdStartDistribution, MetricError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(MetricError::NonPositiveTemperature);
    }
    if !dist.is_dense() {
        return Err(MetricError::SparseDistribution);
    }
    let max = dist.entries.iter().map(|e| e.1).fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(dist.clone());
    }
    let log_max = libm::log(max);
    let weights: Vec<f64> = dist
        .entries
        .iter()
        .map(|&(_, p)| {
            if p > 0.0 {
                libm::exp((libm::log(p) - log_max) / temperature)
            } else {
                0.0
            }
        })
        .collect();
    let norm: f64 = weights.iter().sum();
    Ok(ColdStartDistribution {
        model_id: dist.model_id.clone(),
        vocab_ref: dist.vocab_ref.clone(),
        entries: dist
            .entries
            .iter()
            .zip(weights)
            .map(|(&(id, _), w)| (id, w / norm))
            .collect(),
        residual_mass: 0.0,
        temperature_applied: dist.temperature_applied * temperature,
        mass_clamped: false,
    })
}

/// Shannon entropy in nats over the listed entries.
pub fn entropy(dist: &ColdStartDistribution) -> f64 {
    -dist
        .entries
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|&(_, p)| p * libm::log(p))
        .sum::<f64>()
}

/// The alternative KAP/STAP denominators, kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denominators {
    pub keyword_ids: usize,
    pub keyword_ids_with_mass: usize,
    pub keyword_strings: usize,
    pub special_ids: usize,
    pub special_ids_with_mass: usize,
    pub kap_over_ids_with_mass: Option<f64>,
    pub kap_over_keyword_strings: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_id: String,
    pub vocab_name: String,
    pub pkp: f64,
    pub stp: f64,
    pub kap: Option<f64>,
    pub stap: Option<f64>,
    pub nlp: f64,
    pub top_keywords: Vec<TopToken>,
    pub top_specials: Vec<TopToken>,
    pub formatting: FormattingProbs,
    /// Metrics are lower bounds because part of the mass is unlisted.
    pub sparse: bool,
    pub residual_mass: f64,
    pub control_mass: f64,
    pub temperature: f64,
    pub denominators: Denominators,
}

impl MetricsReport {
    pub fn compute(dist: &ColdStartDistribution, index: &ClassIndex<'_>, k: usize) -> Result<Self, MetricError> {
        let vocab = index.vocab();
        let pkp = compute_pkp(dist, index);
        let with_mass = |class| {
            dist.entries
                .iter()
                .filter(|&&(id, p)| p > 0.0 && index.is(id, class))
                .count()
        };
        let ratio = |n: usize| (n > 0).then(|| pkp / n as f64);
        let keyword_ids_with_mass = with_mass(TokenClass::ProgrammingKeyword);
        let denominators = Denominators {
            keyword_ids: index.count(TokenClass::ProgrammingKeyword),
            keyword_ids_with_mass,
            keyword_strings: index.keyword_strings(),
            special_ids: index.count(TokenClass::SpecialToken),
            special_ids_with_mass: with_mass(TokenClass::SpecialToken),
            kap_over_ids_with_mass: ratio(keyword_ids_with_mass),
            kap_over_keyword_strings: ratio(index.keyword_strings()),
        };
        Ok(Self {
            model_id: dist.model_id.clone(),
            vocab_name: vocab.name().into(),
            pkp,
            stp: compute_stp(dist, index),
            kap: compute_kap(dist, index).ok(),
            stap: compute_stap(dist, index).ok(),
            nlp: compute_nlp(dist, index),
            top_keywords: top_k_by_class(dist, index, TokenClass::ProgrammingKeyword, k)?,
            top_specials: top_k_by_class(dist, index, TokenClass::SpecialToken, k)?,
            formatting: formatting_probs(dist, vocab),
            sparse: !dist.is_dense(),
            residual_mass: dist.residual_mass,
            control_mass: control_mass(dist, vocab),
            temperature: dist.temperature_applied,
            denominators,
        })
    }
}

/// The bundled list of common English words.
pub fn bundled_natural_words() -> Vec<&'static str> {
    include_str!("../data/natural_words.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}
