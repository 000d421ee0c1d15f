//! Report documents: one analysis result plus the metadata needed to audit it.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokscope_core::charset::{CharsetResult, ReferenceCount};
use tokscope_core::coldstart::MetricsReport;
use tokscope_core::compare::{ComparisonTable, DeltaReport, SweepSummary};
use tokscope_core::keywords::{CoverageResult, KeywordRanks, MatchMode};
use tokscope_core::vocab::Decoding;

use crate::error::Result;
use crate::io::{sha256_file, DumpValidation};
use crate::published::PublishedTable;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabCoverage {
    pub vocab_name: String,
    pub tokens: usize,
    pub decoding: Decoding,
    /// Under the active match mode, one per language.
    pub results: Vec<CoverageResult>,
    /// Under the other match mode.
    pub alternate: Vec<CoverageResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub match_mode: MatchMode,
    pub vocabularies: Vec<VocabCoverage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RanksReport {
    pub vocabularies: Vec<KeywordRanks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharsetReport {
    pub symbols: String,
    pub results: Vec<CharsetResult>,
    /// Published counts the results are compared against.
    pub reference: Vec<ReferenceCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdstartReport {
    pub metrics: MetricsReport,
    /// Shannon entropy in nats; dense distributions only.
    pub entropy: Option<f64>,
    /// The dump's residual was within tolerance of zero and clamped.
    pub mass_clamped: bool,
    pub decoding: Decoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ComparisonReport {
    Computed { table: ComparisonTable },
    Published { tables: Vec<PublishedTable> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    Coverage(CoverageReport),
    Ranks(RanksReport),
    Charset(CharsetReport),
    Coldstart(ColdstartReport),
    Comparison(ComparisonReport),
    Delta(DeltaReport),
    Sweep(SweepSummary),
    Validation(DumpValidation),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Coverage(_) => "coverage",
            Payload::Ranks(_) => "ranks",
            Payload::Charset(_) => "charset",
            Payload::Coldstart(_) => "coldstart",
            Payload::Comparison(_) => "comparison",
            Payload::Delta(_) => "delta",
            Payload::Sweep(_) => "sweep",
            Payload::Validation(_) => "validation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Every default that shaped the result, so a report can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub match_mode: MatchMode,
    pub symbols: String,
    /// `default` or the symbols file.
    pub symbols_source: String,
    /// `bundled` or the data directory.
    pub datasets: String,
    pub natural_words: usize,
    pub keywords: usize,
    pub top_k: usize,
    pub temperature: Option<f64>,
    pub stp_threshold: f64,
    pub rank: String,
    pub kap_denominator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    /// Unix seconds; omitted in deterministic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub settings: Settings,
}

impl Metadata {
    pub fn new<P: AsRef<Path>>(inputs: &[P], settings: Settings, deterministic: bool) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let p = p.as_ref();
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?;
        let timestamp = (!deterministic).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Ok(Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            inputs,
            timestamp,
            settings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub payload: Payload,
    pub metadata: Metadata,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
