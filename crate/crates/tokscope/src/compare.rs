//! Runs every manifest entry through the cold-start pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use tokscope_core::coldstart::MetricsReport;
use tokscope_core::compare::{ComparisonTable, ModelManifest};
use tokscope_core::vocab::Vocabulary;

use crate::io::{load_distribution, load_vocabulary, Datasets, VocabFormat};

/// Builds the comparison table for `manifest`.
///
/// Each distinct vocabulary is loaded once. Rows are computed in parallel and
/// merged in manifest order; a row that fails to load becomes an error record.
pub fn run_comparison(manifest: &ModelManifest, datasets: &Datasets, k: usize) -> ComparisonTable {
    let classifier = datasets.classifier();
    let paths: Vec<&str> = manifest
        .entries()
        .iter()
        .map(|e| e.vocab_path.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let vocabs: BTreeMap<&str, Result<Vocabulary, String>> = paths
        .par_iter()
        .map(|&p| (p, load_vocabulary(Path::new(p), VocabFormat::Auto).map_err(|e| e.to_string())))
        .collect();
    let indexes: BTreeMap<&str, _> = vocabs
        .iter()
        .filter_map(|(&p, v)| v.as_ref().ok().map(|v| (p, classifier.index(v))))
        .collect();

    let outcomes: Vec<Result<Option<MetricsReport>, String>> = manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let vocab = vocabs[entry.vocab_path.as_str()].as_ref().map_err(Clone::clone)?;
            let Some(dump) = &entry.dump_path else {
                return Ok(None);
            };
            let index = &indexes[entry.vocab_path.as_str()];
            let dist = load_distribution(Path::new(dump), vocab).map_err(|e| e.to_string())?;
            MetricsReport::compute(&dist, index, k)
                .map(Some)
                .map_err(|e| e.to_string())
        })
        .collect();
    ComparisonTable::assemble(manifest, outcomes)
}
