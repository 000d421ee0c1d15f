use std::path::Path;

use serde::{Deserialize, Serialize};
use tokscope_core::coldstart::{ColdStartDistribution, DistributionError, RawDistribution};
use tokscope_core::vocab::Vocabulary;

use super::read_text;
use crate::error::{Error, Result};

pub const DUMP_SCHEMA: &str = "coldstart-dump/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpFile {
    schema: String,
    model_id: String,
    vocab_size: usize,
    temperature: f64,
    dense: bool,
    entries: Vec<DumpEntry>,
    /// `bos_only` or `empty`, written by the probe.
    #[serde(default)]
    #[allow(dead_code)]
    context_mode: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    metadata: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DumpEntry {
    id: u64,
    p: Probability,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Probability {
    Number(f64),
    Decimal(String),
}

fn schema_violation(path: &Path, reason: impl Into<String>) -> Error {
    Error::Distribution {
        path: path.into(),
        source: DistributionError::SchemaViolation(reason.into()),
    }
}

/// Parses a dump without checking it against a vocabulary.
pub fn read_dump(path: &Path) -> Result<RawDistribution> {
    let text = read_text(path)?;
    let file: DumpFile = serde_json::from_str(&text).map_err(|e| schema_violation(path, e.to_string()))?;
    if file.schema != DUMP_SCHEMA {
        return Err(schema_violation(
            path,
            format!("schema is {:?}, expected {DUMP_SCHEMA:?}", file.schema),
        ));
    }
    let entries = file
        .entries
        .into_iter()
        .map(|e| {
            let p = match e.p {
                Probability::Number(p) => p,
                Probability::Decimal(s) => s
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| schema_violation(path, format!("entry {}: {s:?} is not a decimal", e.id)))?,
            };
            Ok((e.id, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawDistribution {
        model_id: file.model_id,
        vocab_size: file.vocab_size,
        temperature: file.temperature,
        dense: file.dense,
        entries,
    })
}

pub fn load_distribution(path: &Path, vocab: &Vocabulary) -> Result<ColdStartDistribution> {
    ColdStartDistribution::from_raw(read_dump(path)?, vocab).map_err(|source| Error::Distribution {
        path: path.into(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpValidation {
    pub path: String,
    pub model_id: Option<String>,
    pub vocab_name: Option<String>,
    pub entries: usize,
    pub dense: Option<bool>,
    pub total_mass: Option<f64>,
    pub violations: Vec<String>,
}

impl DumpValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collects every violation instead of stopping at the first. Only a
/// missing or unreadable file is an error.
pub fn validate_dump(path: &Path, vocab: Option<&Vocabulary>) -> Result<DumpValidation> {
    let mut report = DumpValidation {
        path: path.display().to_string(),
        model_id: None,
        vocab_name: vocab.map(|v| v.name().to_string()),
        entries: 0,
        dense: None,
        total_mass: None,
        violations: Vec::new(),
    };
    match read_dump(path) {
        Ok(raw) => {
            report.model_id = Some(raw.model_id.clone());
            report.entries = raw.entries.len();
            report.dense = Some(raw.dense);
            report.total_mass = Some(raw.entries.iter().map(|e| e.1).sum());
            report.violations = raw.violations(vocab).iter().map(ToString::to_string).collect();
        }
        Err(Error::Distribution { source, .. }) => report.violations.push(source.to_string()),
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Serializes a distribution in the dump format, probabilities as decimal
/// strings that parse back to the same `f64`.
pub fn dump_to_json(dist: &ColdStartDistribution, vocab_size: usize) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        schema: &'a str,
        model_id: &'a str,
        vocab_size: usize,
        temperature: f64,
        dense: bool,
        entries: Vec<OutEntry>,
    }
    #[derive(Serialize)]
    struct OutEntry {
        id: u32,
        p: String,
    }
    let out = Out {
        schema: DUMP_SCHEMA,
        model_id: dist.model_id(),
        vocab_size,
        temperature: dist.temperature_applied(),
        dense: dist.is_dense(),
        entries: dist
            .entries()
            .iter()
            .map(|&(id, p)| OutEntry { id, p: p.to_string() })
            .collect(),
    };
    serde_json::to_string_pretty(&out).expect("dump serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tokscope_core::vocab::entries_from;

    fn vocab4() -> Vocabulary {
        Vocabulary::from_parts("four", entries_from([("a", 0), ("b", 1), ("c", 2), ("d", 3)]), vec![]).unwrap()
    }

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("dump.json");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn decimal_strings_and_floats() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"temperature":1.0,"dense":true,
                "entries":[{"id":0,"p":"0.4"},{"id":1,"p":0.3},{"id":2,"p":"2e-1"},{"id":3,"p":"0.1"}]}"#,
        );
        let d = load_distribution(&p, &vocab4()).unwrap();
        assert_eq!(d.residual_mass(), 0.0);
        assert_eq!(d.probability(2), 0.2);
    }

    #[test]
    fn sparse_residual() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"temperature":1.0,"dense":false,
                "entries":[{"id":0,"p":"0.4"},{"id":1,"p":"0.3"}]}"#,
        );
        let d = load_distribution(&p, &vocab4()).unwrap();
        assert!((d.residual_mass() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        for body in [
            r#"{"schema":"coldstart-dump/2","model_id":"m","vocab_size":4,"temperature":1.0,"dense":false,"entries":[]}"#,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"temperature":1.0,"dense":false,"entries":[{"id":0,"p":"x"}]}"#,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"dense":false,"entries":[]}"#,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"temperature":1.0,"dense":false,"entries":[],"extra":1}"#,
        ] {
            let p = write(&dir, body);
            let err = load_distribution(&p, &vocab4()).unwrap_err();
            assert!(
                matches!(err, Error::Distribution { source: DistributionError::SchemaViolation(_), .. }),
                "{body}: {err}"
            );
        }
    }

    #[test]
    fn validation_lists_every_violation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            r#"{"schema":"coldstart-dump/1","model_id":"m","vocab_size":4,"temperature":1.0,"dense":true,
                "entries":[{"id":1,"p":"1.2"},{"id":0,"p":"0.3"}]}"#,
        );
        let r = validate_dump(&p, Some(&vocab4())).unwrap();
        assert!(!r.is_valid());
        assert_eq!(r.violations.len(), 3, "{:?}", r.violations);
        assert!(validate_dump(&dir.path().join("missing.json"), None).is_err());
    }

    #[test]
    fn written_dumps_read_back_identically() {
        let v = vocab4();
        let d = ColdStartDistribution::new("m", &v, vec![(0, 0.1 + 0.2), (1, 1.0 / 3.0), (3, 1e-300)], false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, &dump_to_json(&d, 4));
        assert_eq!(load_distribution(&p, &v).unwrap(), d);
        assert!(validate_dump(&p, Some(&v)).unwrap().is_valid());
    }
}
