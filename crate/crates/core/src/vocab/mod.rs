//! Tokenizer vocabularies, byte-level decoding and token classification.

mod class;
mod codec;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use class::{ClassIndex, ClassSet, Classifier, TokenClass};
pub use codec::{decode_surface, ByteCodec, CodecError, BYTE_LEVEL};

pub type TokenId = u32;

/// Share of undecodable surfaces above which a vocabulary is treated as not
/// byte-level encoded.
pub const IDENTITY_FALLBACK_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("duplicate token id {0}")]
    DuplicateId(TokenId),
    #[error("duplicate surface {0:?}")]
    DuplicateSurface(String),
    #[error("token {0} has an empty surface")]
    EmptySurface(TokenId),
    #[error("added token {id} conflicts with vocabulary entry {existing:?}")]
    AddedTokenConflict { id: TokenId, existing: String },
    #[error("unknown token id {0}")]
    UnknownToken(TokenId),
}

/// How surfaces were turned into bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoding {
    ByteLevel,
    /// Surfaces taken as UTF-8; used when the file is not byte-level encoded.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
    /// Raw bytes the token stands for.
    pub bytes: Vec<u8>,
    /// Listed in the tokenizer's added-token section.
    pub added: bool,
    /// Present in the model vocabulary proper (counts toward [`Vocabulary::size`]).
    pub base: bool,
    /// Surface was not byte-level encoded and `bytes` is its UTF-8.
    pub literal: bool,
}

impl Token {
    /// Decoded bytes as text, with invalid UTF-8 replaced.
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.bytes).into_owned()
    }
}

/// An immutable token id → surface map.
///
/// `size` counts the entries of the model vocabulary. Added tokens that live
/// outside it (chat markers, reserved ids) stay addressable by id but are not
/// part of the count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    name: String,
    tokens: Vec<Token>,
    by_surface: BTreeMap<String, TokenId>,
    size: usize,
    decoding: Decoding,
    literal_count: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from `(surface, id)` entries and `(id, content)`
    /// added tokens.
    ///
    /// Added tokens whose id is already an entry only mark that entry; the
    /// content has to agree with the entry's surface.
    pub fn from_parts(
        name: impl Into<String>,
        entries: Vec<(String, TokenId)>,
        added: Vec<(TokenId, String)>,
    ) -> Result<Self, VocabError> {
        let mut by_surface = BTreeMap::new();
        let mut seen_ids = BTreeSet::new();
        for (surface, id) in &entries {
            if surface.is_empty() {
                return Err(VocabError::EmptySurface(*id));
            }
            if !seen_ids.insert(*id) {
                return Err(VocabError::DuplicateId(*id));
            }
            if by_surface.insert(surface.clone(), *id).is_some() {
                return Err(VocabError::DuplicateSurface(surface.clone()));
            }
        }

        let undecodable = entries
            .iter()
            .filter(|(surface, _)| !BYTE_LEVEL.is_encoded(surface))
            .count();
        let decoding = if !entries.is_empty()
            && undecodable as f64 / entries.len() as f64 > IDENTITY_FALLBACK_THRESHOLD
        {
            Decoding::Identity
        } else {
            Decoding::ByteLevel
        };

        let mut added_ids = BTreeSet::new();
        let mut extra = Vec::new();
        for (id, content) in added {
            if !added_ids.insert(id) {
                return Err(VocabError::DuplicateId(id));
            }
            if seen_ids.contains(&id) {
                let existing = entries.iter().find(|(_, eid)| *eid == id).map(|(s, _)| s);
                let agrees = |surface: &String| {
                    *surface == content
                        || BYTE_LEVEL.decode(surface).is_ok_and(|b| b == content.as_bytes())
                };
                if let Some(existing) = existing.filter(|s| !agrees(s)) {
                    return Err(VocabError::AddedTokenConflict {
                        id,
                        existing: existing.clone(),
                    });
                }
            } else {
                if content.is_empty() {
                    return Err(VocabError::EmptySurface(id));
                }
                extra.push((content, id));
            }
        }

        let size = entries.len();
        let mut tokens: Vec<Token> = entries
            .into_iter()
            .map(|(surface, id)| decode_token(surface, id, decoding, added_ids.contains(&id), true))
            .chain(
                extra
                    .into_iter()
                    .map(|(content, id)| literal_token(content, id, true, false)),
            )
            .collect();
        tokens.sort_unstable_by_key(|t| t.id);
        let literal_count = tokens.iter().filter(|t| t.base && t.literal).count();

        Ok(Self {
            name: name.into(),
            tokens,
            by_surface,
            size,
            decoding,
            literal_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of model-vocabulary entries.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of addressable ids, added tokens included.
    pub fn id_space(&self) -> usize {
        self.tokens.len()
    }

    pub fn decoding(&self) -> Decoding {
        self.decoding
    }

    /// Entries whose surface had to be read literally under byte-level decoding.
    pub fn literal_count(&self) -> usize {
        self.literal_count
    }

    pub fn token(&self, id: TokenId) -> Option<&Token> {
        self.position(id).map(|i| &self.tokens[i])
    }

    pub fn contains(&self, id: TokenId) -> bool {
        self.position(id).is_some()
    }

    pub(crate) fn position(&self, id: TokenId) -> Option<usize> {
        self.tokens.binary_search_by_key(&id, |t| t.id).ok()
    }

    /// All addressable tokens in id order.
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Model-vocabulary entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.base)
    }

    pub fn is_added(&self, id: TokenId) -> bool {
        self.token(id).is_some_and(|t| t.added)
    }

    pub fn added_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.tokens.iter().filter(|t| t.added).map(|t| t.id)
    }

    pub fn id_of_surface(&self, surface: &str) -> Option<TokenId> {
        self.by_surface.get(surface).copied()
    }

    /// Looks up the entry whose decoded form is exactly `bytes`.
    pub fn id_of_bytes(&self, bytes: &[u8]) -> Option<TokenId> {
        match self.decoding {
            Decoding::ByteLevel => self.id_of_surface(&BYTE_LEVEL.encode(bytes)),
            Decoding::Identity => core::str::from_utf8(bytes)
                .ok()
                .and_then(|s| self.id_of_surface(s)),
        }
    }

    /// Rank of a token: its position in id order, i.e. the id itself.
    pub fn rank_of(&self, id: TokenId) -> Result<usize, VocabError> {
        if self.contains(id) {
            Ok(id as usize)
        } else {
            Err(VocabError::UnknownToken(id))
        }
    }

    /// Surface a token would be stored under, mirroring how it was decoded.
    pub fn encode_surface(&self, token: &Token) -> String {
        if token.literal || self.decoding == Decoding::Identity {
            String::from_utf8_lossy(&token.bytes).into_owned()
        } else {
            BYTE_LEVEL.encode(&token.bytes)
        }
    }
}

fn decode_token(surface: String, id: TokenId, decoding: Decoding, added: bool, base: bool) -> Token {
    match decoding {
        Decoding::ByteLevel => match BYTE_LEVEL.decode(&surface) {
            Ok(bytes) => Token {
                id,
                surface,
                bytes,
                added,
                base,
                literal: false,
            },
            Err(_) => literal_token(surface, id, added, base),
        },
        Decoding::Identity => literal_token(surface, id, added, base),
    }
}

fn literal_token(surface: String, id: TokenId, added: bool, base: bool) -> Token {
    Token {
        id,
        bytes: surface.as_bytes().to_vec(),
        surface,
        added,
        base,
        literal: true,
    }
}

/// Surface with every non-ASCII or control character written as `\uXXXX`,
/// the way token cells are usually printed (`Ġ(` becomes `\u0120(`).
pub fn escape_surface(surface: &str) -> String {
    let mut out = String::with_capacity(surface.len());
    for c in surface.chars() {
        if c.is_ascii() && !c.is_ascii_control() {
            out.push(c);
        } else {
            let mut units = [0u16; 2];
            for unit in c.encode_utf16(&mut units) {
                out.push_str(&alloc::format!("\\u{:04x}", unit));
            }
        }
    }
    out
}

/// Convenience for tests and fixtures: entries from `(surface, id)` pairs.
pub fn entries_from<'a>(pairs: impl IntoIterator<Item = (&'a str, TokenId)>) -> Vec<(String, TokenId)> {
    pairs.into_iter().map(|(s, id)| (s.to_string(), id)).collect()
}
