use std::path::{Path, PathBuf};

use tokscope_core::coldstart::bundled_natural_words;
use tokscope_core::keywords::{bundled_keyword_sets, keyword_union, load_keyword_sets, KeywordSet};
use tokscope_core::{Classifier, SymbolSet};

use super::read_text;
use crate::error::{Error, Result};

/// Replaces the bundled datasets with `<dir>/keywords/<language>` files and an
/// optional `<dir>/natural_words.txt`.
pub const DATA_DIR_ENV: &str = "TOKSCOPE_DATA_DIR";

/// Keyword sets, natural-word list and symbol set an analysis runs with.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub keyword_sets: Vec<KeywordSet>,
    pub natural_words: Vec<String>,
    pub symbols: SymbolSet,
    /// `bundled` or the data directory the datasets were read from.
    pub source: String,
    /// `default` or the symbols file path.
    pub symbols_source: String,
}

impl Datasets {
    /// Bundled data, or the directory named by `data_dir` (falling back to
    /// [`DATA_DIR_ENV`]).
    pub fn load(data_dir: Option<&Path>, symbols: Option<&Path>) -> Result<Self> {
        let env_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        let dir = data_dir.map(Path::to_path_buf).or(env_dir);
        let (keyword_sets, natural_words, source) = match dir {
            None => (
                bundled_keyword_sets(),
                bundled_natural_words().into_iter().map(String::from).collect(),
                "bundled".to_string(),
            ),
            Some(dir) => {
                let keyword_dir = dir.join("keywords");
                let sets = load_keyword_sets(|lang| read_text(&keyword_dir.join(lang.file_name())).ok())?;
                let words_path = dir.join("natural_words.txt");
                let words = if words_path.exists() {
                    parse_word_list(&read_text(&words_path)?)
                } else {
                    bundled_natural_words().into_iter().map(String::from).collect()
                };
                (sets, words, dir.display().to_string())
            }
        };
        let (symbols, symbols_source) = match symbols {
            None => (SymbolSet::default(), "default".to_string()),
            Some(path) => {
                let set = SymbolSet::parse(&read_text(path)?).map_err(|source| Error::Symbols {
                    path: path.into(),
                    source,
                })?;
                (set, path.display().to_string())
            }
        };
        Ok(Self {
            keyword_sets,
            natural_words,
            symbols,
            source,
            symbols_source,
        })
    }

    pub fn classifier(&self) -> Classifier {
        Classifier::new(
            keyword_union(&self.keyword_sets),
            &self.natural_words,
            self.symbols.clone(),
        )
    }
}

fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tokscope_core::keywords::{bundled_dataset, KeywordError, Language};

    #[test]
    fn bundled_defaults() {
        let d = Datasets::load(None, None).unwrap();
        assert_eq!(d.keyword_sets.len(), 12);
        assert_eq!(d.natural_words.len(), 50);
        assert_eq!(d.symbols, SymbolSet::default());
        assert_eq!(d.classifier().keyword_count(), 276);
    }

    fn copy_bundled(dir: &Path) {
        let kw = dir.join("keywords");
        std::fs::create_dir_all(&kw).unwrap();
        for lang in Language::ALL {
            std::fs::write(kw.join(lang.file_name()), bundled_dataset(lang)).unwrap();
        }
    }

    #[test]
    fn user_directory_is_checked_for_cardinality() {
        let dir = tempfile::tempdir().unwrap();
        copy_bundled(dir.path());
        assert_eq!(Datasets::load(Some(dir.path()), None).unwrap().keyword_sets.len(), 12);

        let python = dir.path().join("keywords/python");
        let short: Vec<&str> = bundled_dataset(Language::Python).lines().filter(|l| *l != "yield").collect();
        std::fs::write(&python, short.join("\n")).unwrap();
        match Datasets::load(Some(dir.path()), None) {
            Err(Error::Keywords(KeywordError::CardinalityMismatch { language, expected, found })) => {
                assert_eq!((language, expected, found), (Language::Python, 35, 34));
            }
            other => panic!("expected a cardinality mismatch, got {other:?}"),
        }

        std::fs::remove_file(&python).unwrap();
        assert!(matches!(
            Datasets::load(Some(dir.path()), None),
            Err(Error::Keywords(KeywordError::MissingDataset(Language::Python)))
        ));
    }

    #[test]
    fn symbols_file_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("symbols.txt");
        std::fs::write(&p, "(\n)\n\\t\n").unwrap();
        let d = Datasets::load(None, Some(&p)).unwrap();
        assert_eq!(d.symbols.len(), 3);
        std::fs::write(&p, "ab\n").unwrap();
        assert!(matches!(Datasets::load(None, Some(&p)), Err(Error::Symbols { .. })));
    }
}
