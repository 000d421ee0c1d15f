//! Per-model comparison tables, distillation deltas and quantization sweeps.
//!
//! Loading the models listed in a manifest is IO and lives in the `tokscope`
//! crate; this module only aggregates finished [`MetricsReport`]s.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coldstart::MetricsReport;
use crate::vocab::escape_surface;

/// Column headers of the cold-start comparison table.
pub const COMPARISON_COLUMNS: [&str; 7] = [
    "KeyW Prob",
    "Spec tok Prob",
    "KeyW Avg Prob",
    "Spec tok Avg Prob",
    "NL prob",
    "Top-3 KeyW",
    "Top-3 Spec",
];

pub const FORMATTING_COLUMNS: [&str; 4] = ["Tab", "New line", "Two spaces", "Four spaces"];

/// Rows above this special-token probability are flagged as noisy.
pub const DEFAULT_STP_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Instruct,
    Coder,
    CoderInstruct,
    Distilled,
}

/// GGUF-style quantization levels, most aggressive first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
#[allow(non_camel_case_types)]
pub enum QuantLevel {
    Q2_K,
    Q3_K_S,
    Q3_K_M,
    Q3_K_L,
    Q4_0,
    Q4_1,
    Q4_K_S,
    Q4_K_M,
    Q5_0,
    Q5_1,
    Q5_K_S,
    Q5_K_M,
    Q6_K,
    Q8_0,
    BF16,
    F16,
    F32,
}

impl QuantLevel {
    pub const ALL: [QuantLevel; 17] = [
        Self::Q2_K,
        Self::Q3_K_S,
        Self::Q3_K_M,
        Self::Q3_K_L,
        Self::Q4_0,
        Self::Q4_1,
        Self::Q4_K_S,
        Self::Q4_K_M,
        Self::Q5_0,
        Self::Q5_1,
        Self::Q5_K_S,
        Self::Q5_K_M,
        Self::Q6_K,
        Self::Q8_0,
        Self::BF16,
        Self::F16,
        Self::F32,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Q2_K => "Q2_K",
            Self::Q3_K_S => "Q3_K_S",
            Self::Q3_K_M => "Q3_K_M",
            Self::Q3_K_L => "Q3_K_L",
            Self::Q4_0 => "Q4_0",
            Self::Q4_1 => "Q4_1",
            Self::Q4_K_S => "Q4_K_S",
            Self::Q4_K_M => "Q4_K_M",
            Self::Q5_0 => "Q5_0",
            Self::Q5_1 => "Q5_1",
            Self::Q5_K_S => "Q5_K_S",
            Self::Q5_K_M => "Q5_K_M",
            Self::Q6_K => "Q6_K",
            Self::Q8_0 => "Q8_0",
            Self::BF16 => "BF16",
            Self::F16 => "F16",
            Self::F32 => "F32",
        }
    }
}

impl fmt::Display for QuantLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown quantization level {0:?}")]
pub struct UnknownQuantLevel(pub String);

impl FromStr for QuantLevel {
    type Err = UnknownQuantLevel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|q| q.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownQuantLevel(s.into()))
    }
}

impl TryFrom<String> for QuantLevel {
    type Error = UnknownQuantLevel;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<QuantLevel> for String {
    fn from(q: QuantLevel) -> Self {
        q.label().into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("manifest has no entries")]
    Empty,
    #[error("duplicate model_id {0:?}")]
    DuplicateModelId(String),
    #[error("model {model_id}: file {path} not found")]
    MissingFile { model_id: String, path: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub model_id: String,
    pub vocab_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_path: Option<String>,
    pub family: String,
    pub variant: Variant,
    pub size_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quant_label: Option<QuantLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ManifestEntry>", into = "Vec<ManifestEntry>")]
pub struct ModelManifest {
    entries: Vec<ManifestEntry>,
}

impl ModelManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, ManifestError> {
        if entries.is_empty() {
            return Err(ManifestError::Empty);
        }
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.model_id.as_str()) {
                return Err(ManifestError::DuplicateModelId(e.model_id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ManifestEntry] {
        &mut self.entries
    }
}

impl TryFrom<Vec<ManifestEntry>> for ModelManifest {
    type Error = ManifestError;

    fn try_from(entries: Vec<ManifestEntry>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<ModelManifest> for Vec<ManifestEntry> {
    fn from(m: ModelManifest) -> Self {
        m.entries
    }
}

/// The seven cold-start columns of one comparison row.
///
/// Keywords are listed as plain text without the leading space, special
/// tokens as escaped vocabulary surfaces (`\u0120(`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCells {
    pub pkp: f64,
    pub stp: f64,
    pub kap: Option<f64>,
    pub stap: Option<f64>,
    pub nlp: f64,
    pub top_keywords: Vec<String>,
    pub top_specials: Vec<String>,
}

impl From<&MetricsReport> for MetricCells {
    fn from(r: &MetricsReport) -> Self {
        Self {
            pkp: r.pkp,
            stp: r.stp,
            kap: r.kap,
            stap: r.stap,
            nlp: r.nlp,
            top_keywords: r.top_keywords.iter().map(|t| t.token.trim_start_matches(' ').to_string()).collect(),
            top_specials: r.top_specials.iter().map(|t| escape_surface(&t.surface)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormattingCells {
    pub tab: f64,
    pub newline: f64,
    pub two_spaces: f64,
    pub four_spaces: f64,
}

impl From<&MetricsReport> for FormattingCells {
    fn from(r: &MetricsReport) -> Self {
        let f = &r.formatting;
        Self {
            tab: f.tab.probability,
            newline: f.newline.probability,
            two_spaces: f.two_spaces.probability,
            four_spaces: f.four_spaces.probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_id: String,
    pub family: String,
    pub variant: Variant,
    pub size_label: String,
    pub quant_label: Option<QuantLevel>,
    /// Absent for coverage-only rows without a dump.
    pub cells: Option<MetricCells>,
    pub formatting: Option<FormattingCells>,
    /// Cells are lower bounds computed from a top-K dump.
    #[serde(default)]
    pub sparse: bool,
}

impl ComparisonRow {
    pub fn new(entry: &ManifestEntry, report: Option<&MetricsReport>) -> Self {
        Self {
            model_id: entry.model_id.clone(),
            family: entry.family.clone(),
            variant: entry.variant,
            size_label: entry.size_label.clone(),
            quant_label: entry.quant_label,
            cells: report.map(MetricCells::from),
            formatting: report.map(FormattingCells::from),
            sparse: report.is_some_and(|r| r.sparse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub model_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    pub errors: Vec<RowError>,
}

impl ComparisonTable {
    /// Merges per-entry outcomes in manifest order. Failed entries become
    /// error records instead of rows.
    pub fn assemble<I>(manifest: &ModelManifest, outcomes: I) -> Self
    where
        I: IntoIterator<Item = Result<Option<MetricsReport>, String>>,
    {
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for (entry, outcome) in manifest.entries().iter().zip(outcomes) {
            match outcome {
                Ok(report) => rows.push(ComparisonRow::new(entry, report.as_ref())),
                Err(message) => errors.push(RowError {
                    model_id: entry.model_id.clone(),
                    message,
                }),
            }
        }
        Self {
            columns: COMPARISON_COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows,
            errors,
        }
    }

    pub fn row(&self, model_id: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Pkp,
    Stp,
    Kap,
    Stap,
    Nlp,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Self::Pkp, Self::Stp, Self::Kap, Self::Stap, Self::Nlp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pkp => "pkp",
            Self::Stp => "stp",
            Self::Kap => "kap",
            Self::Stap => "stap",
            Self::Nlp => "nlp",
        }
    }

    pub fn of(self, cells: &MetricCells) -> Option<f64> {
        match self {
            Self::Pkp => Some(cells.pkp),
            Self::Stp => Some(cells.stp),
            Self::Kap => cells.kap,
            Self::Stap => cells.stap,
            Self::Nlp => Some(cells.nlp),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: Metric,
    pub base: Option<f64>,
    pub compared: Option<f64>,
    pub absolute: Option<f64>,
    /// `(compared - base) / base * 100`; absent when the base is zero.
    pub relative_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub base_model: String,
    pub compared_model: String,
    pub deltas: Vec<MetricDelta>,
    /// Metrics whose base value is zero, so no relative change exists.
    pub zero_base: Vec<Metric>,
    /// Jaccard similarity of the top keyword lists.
    pub keyword_overlap: f64,
    pub special_overlap: f64,
}

impl DeltaReport {
    pub fn delta(&self, metric: Metric) -> Option<&MetricDelta> {
        self.deltas.iter().find(|d| d.metric == metric)
    }
}

/// `|a ∩ b| / |a ∪ b|`, with two empty lists counting as identical.
pub fn jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(|s| s.as_ref().trim()).collect();
    let b: BTreeSet<&str> = b.iter().map(|s| s.as_ref().trim()).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

pub fn cells_delta(base_model: &str, base: &MetricCells, compared_model: &str, compared: &MetricCells) -> DeltaReport {
    let mut zero_base = Vec::new();
    let deltas = Metric::ALL
        .into_iter()
        .map(|metric| {
            let (b, c) = (metric.of(base), metric.of(compared));
            let absolute = b.zip(c).map(|(b, c)| c - b);
            let relative_percent = match (b, absolute) {
                (Some(b), Some(d)) if b != 0.0 => Some(d / b * 100.0),
                (Some(_), Some(_)) => {
                    zero_base.push(metric);
                    None
                }
                _ => None,
            };
            MetricDelta {
                metric,
                base: b,
                compared: c,
                absolute,
                relative_percent,
            }
        })
        .collect();
    DeltaReport {
        base_model: base_model.into(),
        compared_model: compared_model.into(),
        deltas,
        zero_base,
        keyword_overlap: jaccard(&base.top_keywords, &compared.top_keywords),
        special_overlap: jaccard(&base.top_specials, &compared.top_specials),
    }
}

pub fn distillation_delta(base: &MetricsReport, distilled: &MetricsReport) -> DeltaReport {
    cells_delta(
        &base.model_id,
        &MetricCells::from(base),
        &distilled.model_id,
        &MetricCells::from(distilled),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error("a sweep needs at least two rows with cold-start metrics, found {0}")]
    InsufficientRows(usize),
    #[error("rows mix families {first:?} and {other:?}")]
    MixedFamilies { first: String, other: String },
    #[error("no reference row: expected an unquantized or Q8_0 row")]
    NoReference,
    #[error("reference model {0:?} is not among the rows")]
    UnknownReference(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub model_id: String,
    pub quant_label: Option<QuantLevel>,
    pub pkp: f64,
    pub stp: f64,
    pub kap: Option<f64>,
    pub nlp: f64,
    /// L1 distance to the reference over (pkp, stp, kap, nlp).
    pub distance: f64,
    /// `stp` exceeds the threshold.
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub family: String,
    pub reference: String,
    pub stp_threshold: f64,
    /// Ordered from the most aggressive quantization to unquantized.
    pub points: Vec<SweepPoint>,
    pub nearest: String,
    pub nearest_distance: f64,
}

/// L1 distance over (pkp, stp, kap, nlp); a missing `kap` counts as 0.
pub fn l1_distance(a: &MetricCells, b: &MetricCells) -> f64 {
    (a.pkp - b.pkp).abs()
        + (a.stp - b.stp).abs()
        + (a.kap.unwrap_or(0.0) - b.kap.unwrap_or(0.0)).abs()
        + (a.nlp - b.nlp).abs()
}

/// Summarizes one family across quantization levels.
///
/// The reference is `reference` if given, else the row without a quant label,
/// else the `Q8_0` row. Rows without cold-start cells are ignored.
pub fn quantization_sweep(
    rows: &[ComparisonRow],
    reference: Option<&str>,
    stp_threshold: f64,
) -> Result<SweepSummary, SweepError> {
    let rows: Vec<(&ComparisonRow, &MetricCells)> =
        rows.iter().filter_map(|r| r.cells.as_ref().map(|c| (r, c))).collect();
    if rows.len() < 2 {
        return Err(SweepError::InsufficientRows(rows.len()));
    }
    let family = &rows[0].0.family;
    if let Some((other, _)) = rows.iter().find(|(r, _)| &r.family != family) {
        return Err(SweepError::MixedFamilies {
            first: family.clone(),
            other: other.family.clone(),
        });
    }
    let reference_index = match reference {
        Some(id) => rows
            .iter()
            .position(|(r, _)| r.model_id == id)
            .ok_or_else(|| SweepError::UnknownReference(id.into()))?,
        None => rows
            .iter()
            .position(|(r, _)| r.quant_label.is_none())
            .or_else(|| rows.iter().position(|(r, _)| r.quant_label == Some(QuantLevel::Q8_0)))
            .ok_or(SweepError::NoReference)?,
    };
    let reference_cells = rows[reference_index].1;

    let mut points: Vec<SweepPoint> = rows
        .iter()
        .map(|(r, c)| SweepPoint {
            model_id: r.model_id.clone(),
            quant_label: r.quant_label,
            pkp: c.pkp,
            stp: c.stp,
            kap: c.kap,
            nlp: c.nlp,
            distance: l1_distance(c, reference_cells),
            noisy: c.stp > stp_threshold,
        })
        .collect();

    let reference_id = rows[reference_index].0.model_id.clone();
    let nearest = points
        .iter()
        .filter(|p| p.model_id != reference_id && p.quant_label.is_some())
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .ok_or(SweepError::InsufficientRows(rows.len()))?;
    let (nearest, nearest_distance) = (nearest.model_id.clone(), nearest.distance);

    // Unquantized rows sort last.
    points.sort_by_key(|p| p.quant_label.map_or(QuantLevel::ALL.len(), |q| q as usize));
    Ok(SweepSummary {
        family: family.clone(),
        reference: reference_id,
        stp_threshold,
        points,
        nearest,
        nearest_distance,
    })
}
