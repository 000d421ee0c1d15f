use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::value::RawValue;
use tokscope_core::vocab::{TokenId, Vocabulary};

use super::read_text;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum VocabFormat {
    /// `tokenizer.json` when the top level has a `model` object, else `vocab.json`.
    #[default]
    Auto,
    /// Hugging Face `tokenizer.json`: `model.vocab` plus `added_tokens`.
    TokenizerJson,
    /// Flat `{surface: id}` object.
    VocabJson,
}

/// `{surface: id}` in file order, keeping duplicate keys so they can be reported.
struct VocabMap(Vec<(String, TokenId)>);

impl<'de> Deserialize<'de> for VocabMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MapVisitor;

        impl<'de> Visitor<'de> for MapVisitor {
            type Value = VocabMap;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping token surfaces to ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<VocabMap, A::Error> {
                let mut entries = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some((surface, id)) = map.next_entry::<String, u64>()? {
                    let id = TokenId::try_from(id)
                        .map_err(|_| de::Error::custom(format!("token id {id} out of range")))?;
                    entries.push((surface, id));
                }
                Ok(VocabMap(entries))
            }
        }

        deserializer.deserialize_map(MapVisitor)
    }
}

#[derive(Deserialize)]
struct Probe<'a> {
    #[serde(borrow, default)]
    model: Option<&'a RawValue>,
}

#[derive(Deserialize)]
struct TokenizerFile<'a> {
    #[serde(borrow)]
    model: ModelSection<'a>,
    #[serde(default)]
    added_tokens: Vec<AddedToken>,
}

#[derive(Deserialize)]
struct ModelSection<'a> {
    #[serde(rename = "type", default)]
    kind: Option<String>,
    #[serde(borrow)]
    vocab: Option<&'a RawValue>,
}

#[derive(Deserialize)]
struct AddedToken {
    id: TokenId,
    content: String,
}

/// Vocabulary name from a file name: `qwen2.5.tokenizer.json.gz` → `qwen2.5`.
pub fn vocab_name_from_path(path: &Path) -> String {
    let mut name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in [".gz", ".json", ".tokenizer", ".vocab"] {
        if let Some(stripped) = name.strip_suffix(suffix) {
            name = stripped.to_string();
        }
    }
    if name.is_empty() || name == "tokenizer" || name == "vocab" {
        // `.../Qwen2.5-7B/tokenizer.json` is named after its directory
        if let Some(dir) = path.parent().and_then(|p| p.file_name()) {
            return dir.to_string_lossy().into_owned();
        }
    }
    name
}

pub fn load_vocabulary(path: &Path, format: VocabFormat) -> Result<Vocabulary> {
    let text = read_text(path)?;
    let malformed = |reason: String| Error::MalformedVocabulary {
        path: path.into(),
        reason,
    };
    let format = match format {
        VocabFormat::Auto => {
            let probe: Probe = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
            match probe.model {
                Some(raw) if raw.get().trim_start().starts_with('{') => VocabFormat::TokenizerJson,
                _ => VocabFormat::VocabJson,
            }
        }
        other => other,
    };

    let (entries, added) = match format {
        VocabFormat::TokenizerJson => {
            let file: TokenizerFile = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
            if let Some(kind) = file.model.kind.as_deref().filter(|k| *k != "BPE") {
                return Err(Error::UnsupportedFormat {
                    path: path.into(),
                    reason: format!("model type {kind}; only BPE vocabularies are supported"),
                });
            }
            let raw = file
                .model
                .vocab
                .ok_or_else(|| malformed("model.vocab is missing".into()))?;
            if !raw.get().trim_start().starts_with('{') {
                return Err(Error::UnsupportedFormat {
                    path: path.into(),
                    reason: "model.vocab is not a surface → id object".into(),
                });
            }
            let map: VocabMap = serde_json::from_str(raw.get()).map_err(|e| malformed(e.to_string()))?;
            let added = file.added_tokens.into_iter().map(|a| (a.id, a.content)).collect();
            (map.0, added)
        }
        _ => {
            let map: VocabMap = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
            (map.0, Vec::new())
        }
    };

    Vocabulary::from_parts(vocab_name_from_path(path), entries, added).map_err(|e| malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tokscope_core::vocab::Decoding;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn flat_vocab_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "tiny.vocab.json", r#"{"a": 0, "Ġb": 1, "Ċ": 2}"#);
        let v = load_vocabulary(&p, VocabFormat::Auto).unwrap();
        assert_eq!((v.name(), v.size()), ("tiny", 3));
        assert_eq!(v.token(1).unwrap().bytes, b" b");
    }

    #[test]
    fn tokenizer_json_with_added_tokens() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "t.tokenizer.json",
            r#"{"version":"1.0","model":{"type":"BPE","vocab":{"a":0,"b":1},"merges":[]},
               "added_tokens":[{"id":2,"content":"<|endoftext|>","special":true}]}"#,
        );
        let v = load_vocabulary(&p, VocabFormat::Auto).unwrap();
        assert_eq!((v.size(), v.id_space()), (2, 3));
        assert!(v.is_added(2));
    }

    #[test]
    fn vocab_json_with_a_model_token_is_not_a_tokenizer_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "v.json", r#"{"model": 0, "x": 1}"#);
        assert_eq!(load_vocabulary(&p, VocabFormat::Auto).unwrap().size(), 2);
    }

    #[test]
    fn duplicate_surfaces_and_ids_are_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let dup_key = write(&dir, "a.json", r#"{"a": 0, "a": 1}"#);
        let dup_id = write(&dir, "b.json", r#"{"a": 0, "b": 0}"#);
        for p in [dup_key, dup_id] {
            assert!(matches!(
                load_vocabulary(&p, VocabFormat::Auto),
                Err(Error::MalformedVocabulary { .. })
            ));
        }
    }

    #[test]
    fn errors_by_kind() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        assert!(matches!(load_vocabulary(&missing, VocabFormat::Auto), Err(Error::FileNotFound(_))));
        let garbage = write(&dir, "g.json", "{not json");
        assert!(matches!(
            load_vocabulary(&garbage, VocabFormat::Auto),
            Err(Error::MalformedVocabulary { .. })
        ));
        let unigram = write(&dir, "u.json", r#"{"model":{"type":"Unigram","vocab":[["a",-1.0]]}}"#);
        assert!(matches!(
            load_vocabulary(&unigram, VocabFormat::Auto),
            Err(Error::UnsupportedFormat { .. })
        ));
        let negative = write(&dir, "n.json", r#"{"a": -1}"#);
        assert!(matches!(
            load_vocabulary(&negative, VocabFormat::VocabJson),
            Err(Error::MalformedVocabulary { .. })
        ));
    }

    #[test]
    fn gzip_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.json.gz");
        let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&p).unwrap(), flate2::Compression::fast());
        enc.write_all(br#"{"x": 0, "y": 1}"#).unwrap();
        enc.finish().unwrap();
        let v = load_vocabulary(&p, VocabFormat::VocabJson).unwrap();
        assert_eq!((v.name(), v.size()), ("z", 2));
    }

    #[test]
    fn sentencepiece_style_surfaces_fall_back_to_identity() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "sp.json", r#"{"▁the": 0, "▁def": 1, "x": 2}"#);
        let v = load_vocabulary(&p, VocabFormat::Auto).unwrap();
        assert_eq!(v.decoding(), Decoding::Identity);
    }

    #[test]
    fn names_from_paths() {
        assert_eq!(vocab_name_from_path(Path::new("d/qwen2.5.tokenizer.json.gz")), "qwen2.5");
        assert_eq!(vocab_name_from_path(Path::new("models/Qwen2.5-7B/tokenizer.json")), "Qwen2.5-7B");
        assert_eq!(vocab_name_from_path(Path::new("llama.vocab.json")), "llama");
    }
}
