//! Published comparison rows, kept as the exact cell text.
//!
//! These values come from specific model weights and runtimes and cannot be
//! recomputed from tokenizer files. They are bundled so that reports,
//! deltas and sweeps can run against them and so the table layout can be
//! checked against the original.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use tokscope_core::compare::{ComparisonRow, FormattingCells, MetricCells, QuantLevel, Variant};

use crate::error::{Error, Result};

pub const BUNDLED: &str = include_str!("../data/published.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// `Model` followed by the seven cold-start columns.
    Metrics,
    /// `Model` followed by the four formatting columns.
    Formatting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedRow {
    pub model: String,
    pub family: String,
    pub variant: Variant,
    pub size_label: String,
    pub quant_label: Option<QuantLevel>,
    /// Cell text after the `Model` column, verbatim.
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedTable {
    pub id: String,
    pub kind: TableKind,
    pub caption: String,
    /// Header row including `Model`.
    pub columns: Vec<String>,
    pub rows: Vec<PublishedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedTables {
    pub tables: Vec<PublishedTable>,
}

pub fn bundled() -> &'static PublishedTables {
    static TABLES: OnceLock<PublishedTables> = OnceLock::new();
    TABLES.get_or_init(|| serde_json::from_str(BUNDLED).expect("bundled published tables parse"))
}

fn number(model: &str, column: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("{model}: {column} cell {text:?} is not a number")))
}

fn list(text: &str) -> Vec<String> {
    text.split(", ").map(str::to_string).collect()
}

impl PublishedRow {
    pub fn metric_cells(&self) -> Result<MetricCells> {
        let [pkp, stp, kap, stap, nlp, keywords, specials] = self.cells.as_slice() else {
            return Err(Error::Invalid(format!("{}: expected 7 metric cells", self.model)));
        };
        let n = |column, text| number(&self.model, column, text);
        Ok(MetricCells {
            pkp: n("KeyW Prob", pkp)?,
            stp: n("Spec tok Prob", stp)?,
            kap: Some(n("KeyW Avg Prob", kap)?),
            stap: Some(n("Spec tok Avg Prob", stap)?),
            nlp: n("NL prob", nlp)?,
            top_keywords: list(keywords),
            top_specials: list(specials),
        })
    }

    pub fn formatting_cells(&self) -> Result<FormattingCells> {
        let [tab, newline, two, four] = self.cells.as_slice() else {
            return Err(Error::Invalid(format!("{}: expected 4 formatting cells", self.model)));
        };
        let n = |column, text| number(&self.model, column, text);
        Ok(FormattingCells {
            tab: n("Tab", tab)?,
            newline: n("New line", newline)?,
            two_spaces: n("Two spaces", two)?,
            four_spaces: n("Four spaces", four)?,
        })
    }
}

impl PublishedTables {
    pub fn table(&self, id: &str) -> Option<&PublishedTable> {
        self.tables.iter().find(|t| t.id == id)
    }

    fn find(&self, kind: TableKind, model: &str) -> Option<&PublishedRow> {
        self.tables
            .iter()
            .filter(|t| t.kind == kind)
            .flat_map(|t| &t.rows)
            .find(|r| r.model == model)
    }

    /// Every model with published cold-start cells, in table order.
    pub fn comparison_rows(&self) -> Result<Vec<ComparisonRow>> {
        self.tables
            .iter()
            .filter(|t| t.kind == TableKind::Metrics)
            .flat_map(|t| &t.rows)
            .map(|r| {
                Ok(ComparisonRow {
                    model_id: r.model.clone(),
                    family: r.family.clone(),
                    variant: r.variant,
                    size_label: r.size_label.clone(),
                    quant_label: r.quant_label,
                    cells: Some(r.metric_cells()?),
                    formatting: self
                        .find(TableKind::Formatting, &r.model)
                        .map(PublishedRow::formatting_cells)
                        .transpose()?,
                    sparse: false,
                })
            })
            .collect()
    }

    pub fn comparison_row(&self, model: &str) -> Result<ComparisonRow> {
        self.comparison_rows()?
            .into_iter()
            .find(|r| r.model_id == model)
            .ok_or_else(|| Error::Invalid(format!("no published row for model {model:?}")))
    }
}
