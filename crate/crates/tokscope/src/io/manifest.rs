use std::path::Path;

use tokscope_core::compare::{ManifestEntry, ManifestError, ModelManifest};

use super::read_text;
use crate::error::{Error, Result};

/// Reads a manifest and resolves its paths against the manifest's directory.
///
/// A missing vocabulary file fails the whole manifest; a missing dump only
/// fails its row later on.
pub fn load_manifest(path: &Path) -> Result<ModelManifest> {
    let text = read_text(path)?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
        path: path.into(),
        reason: e.to_string(),
    })?;
    let mut manifest = ModelManifest::new(entries)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for entry in manifest.entries_mut() {
        entry.vocab_path = resolve(base, &entry.vocab_path);
        if let Some(dump) = entry.dump_path.as_mut() {
            *dump = resolve(base, dump);
        }
        if !Path::new(&entry.vocab_path).is_file() {
            return Err(ManifestError::MissingFile {
                model_id: entry.model_id.clone(),
                path: entry.vocab_path.clone(),
            }
            .into());
        }
    }
    Ok(manifest)
}

fn resolve(base: &Path, p: &str) -> String {
    let p = Path::new(p);
    if p.is_absolute() {
        p.display().to_string()
    } else {
        base.join(p).display().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("v.json"), r#"{"a":0}"#).unwrap();
        let m = dir.path().join("m.json");
        std::fs::write(
            &m,
            r#"[{"model_id":"x","vocab_path":"v.json","dump_path":"d.json","family":"f","variant":"base","size_label":"1B"}]"#,
        )
        .unwrap();
        let manifest = load_manifest(&m).unwrap();
        let e = &manifest.entries()[0];
        assert_eq!(Path::new(&e.vocab_path), dir.path().join("v.json"));
        assert_eq!(Path::new(e.dump_path.as_ref().unwrap()), dir.path().join("d.json"));
    }

    #[test]
    fn rejects_bad_manifests() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("v.json"), r#"{"a":0}"#).unwrap();
        let m = dir.path().join("m.json");
        let entry = r#"{"model_id":"x","vocab_path":"v.json","family":"f","variant":"base","size_label":"1B"}"#;

        std::fs::write(&m, format!("[{entry},{entry}]")).unwrap();
        assert!(matches!(
            load_manifest(&m),
            Err(Error::Manifest(ManifestError::DuplicateModelId(id))) if id == "x"
        ));

        std::fs::write(&m, entry.replace("v.json", "gone.json").replace('{', "[{").replace("}", "}]")).unwrap();
        assert!(matches!(
            load_manifest(&m),
            Err(Error::Manifest(ManifestError::MissingFile { .. }))
        ));

        std::fs::write(&m, format!("[{}]", entry.replace("base", "huge"))).unwrap();
        assert!(matches!(load_manifest(&m), Err(Error::MalformedFile { .. })));

        std::fs::write(&m, format!("[{}]", entry.replace("\"1B\"", "\"1B\",\"quant_label\":\"Q9\""))).unwrap();
        assert!(matches!(load_manifest(&m), Err(Error::MalformedFile { .. })));
    }
}
