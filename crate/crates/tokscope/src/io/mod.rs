//! File formats: tokenizer vocabularies, cold-start dumps, keyword and symbol
//! datasets and model manifests.

mod data;
mod dump;
mod manifest;
mod vocab;

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use data::{Datasets, DATA_DIR_ENV};
pub use dump::{dump_to_json, load_distribution, read_dump, validate_dump, DumpValidation, DUMP_SCHEMA};
pub use manifest::load_manifest;
pub use vocab::{load_vocabulary, vocab_name_from_path, VocabFormat};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Reads a file, transparently inflating gzip content.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::with_capacity(raw.len() * 3);
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|e| Error::MalformedFile {
        path: path.into(),
        reason: format!("not UTF-8: {e}"),
    })
}

/// Hex sha256 of the file as stored on disk.
pub fn sha256_file(path: &Path) -> Result<String> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&raw))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
