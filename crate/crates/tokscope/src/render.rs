//! Markdown, CSV and JSON output for report documents.

use std::fmt::Write as _;

use tokscope_core::compare::{
    ComparisonRow, FormattingCells, MetricCells, COMPARISON_COLUMNS, FORMATTING_COLUMNS,
};
use tokscope_core::keywords::{CoverageResult, MatchMode};

use crate::published::{PublishedTable, TableKind};
use crate::report::{
    CharsetReport, ColdstartReport, ComparisonReport, CoverageReport, Payload, RanksReport, ReportDocument,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    #[value(name = "md", alias = "markdown")]
    Markdown,
    Csv,
    Json,
}

pub fn render(doc: &ReportDocument, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Markdown => markdown(&doc.payload),
        Format::Csv => csv(&doc.payload),
    }
}

/// At least four significant digits: fixed notation down to 1e-3, then
/// `1.530E-05` style.
pub fn prob(p: f64) -> String {
    if p == 0.0 {
        return "0".into();
    }
    if !p.is_finite() {
        return p.to_string();
    }
    if p.abs() >= 1e-3 {
        let decimals = (3 - p.abs().log10().floor() as i32).max(0) as usize;
        return format!("{p:.decimals$}");
    }
    let s = format!("{p:.3E}");
    match s.split_once('E') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ("-", d),
                None => ("+", exp),
            };
            format!("{mantissa}E{sign}{digits:0>2}")
        }
        None => s,
    }
}

fn opt_prob(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".into(), prob)
}

fn pct(p: f64) -> String {
    format!("{p:.1}")
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn mode_name(mode: MatchMode) -> &'static str {
    match mode {
        MatchMode::BareOnly => "bare_only",
        MatchMode::BareOrPrefixed => "bare_or_prefixed",
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn md_table<H: AsRef<str>>(out: &mut String, header: &[H], rows: &[Vec<String>]) {
    let line = |cells: Vec<String>| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header.iter().map(|h| cell(h.as_ref())).collect()));
    out.push_str(&line(header.iter().map(|_| "---".to_string()).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(|c| cell(c)).collect()));
    }
}

fn metric_cells(c: &MetricCells) -> Vec<String> {
    vec![
        prob(c.pkp),
        prob(c.stp),
        opt_prob(c.kap),
        opt_prob(c.stap),
        prob(c.nlp),
        c.top_keywords.join(", "),
        c.top_specials.join(", "),
    ]
}

fn formatting_cells(f: &FormattingCells) -> Vec<String> {
    vec![prob(f.tab), prob(f.newline), prob(f.two_spaces), prob(f.four_spaces)]
}

fn with_model(model: &str, cells: Vec<String>) -> Vec<String> {
    let mut row = vec![model.to_string()];
    row.extend(cells);
    row
}

fn headers(columns: &[&str]) -> Vec<String> {
    with_model("Model", columns.iter().map(|c| c.to_string()).collect())
}

fn markdown(payload: &Payload) -> String {
    let mut out = String::new();
    match payload {
        Payload::Coverage(r) => coverage_md(&mut out, r),
        Payload::Ranks(r) => ranks_md(&mut out, r),
        Payload::Charset(r) => charset_md(&mut out, r),
        Payload::Coldstart(r) => coldstart_md(&mut out, r),
        Payload::Comparison(ComparisonReport::Computed { table }) => {
            comparison_md(&mut out, &table.rows);
            if !table.errors.is_empty() {
                out.push_str("\nFailed rows:\n\n");
                for e in &table.errors {
                    let _ = writeln!(out, "- {}: {}", e.model_id, e.message);
                }
            }
        }
        Payload::Comparison(ComparisonReport::Published { tables }) => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                published_md(&mut out, t);
            }
        }
        Payload::Delta(d) => {
            let _ = writeln!(out, "Base: {}  \nCompared: {}\n", d.base_model, d.compared_model);
            let rows: Vec<Vec<String>> = d
                .deltas
                .iter()
                .map(|m| {
                    vec![
                        m.metric.name().to_uppercase(),
                        opt_prob(m.base),
                        opt_prob(m.compared),
                        opt_prob(m.absolute),
                        m.relative_percent.map_or_else(|| "n/a".into(), pct),
                    ]
                })
                .collect();
            md_table(&mut out, &["Metric", "Base", "Compared", "Change", "Relative change (%)"], &rows);
            let _ = writeln!(
                out,
                "\nTop keyword overlap (Jaccard): {:.3}  \nTop special overlap (Jaccard): {:.3}",
                d.keyword_overlap, d.special_overlap
            );
        }
        Payload::Sweep(s) => {
            let _ = writeln!(
                out,
                "Family: {}  \nReference: {}  \nSTP threshold: {}\n",
                s.family, s.reference, s.stp_threshold
            );
            let rows: Vec<Vec<String>> = s
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.quant_label.map_or_else(|| "none".into(), |q| q.to_string()),
                        p.model_id.clone(),
                        prob(p.pkp),
                        prob(p.stp),
                        opt_prob(p.kap),
                        prob(p.nlp),
                        prob(p.distance),
                        if p.noisy { "yes" } else { "no" }.into(),
                    ]
                })
                .collect();
            md_table(
                &mut out,
                &["Quant", "Model", "KeyW Prob", "Spec tok Prob", "KeyW Avg Prob", "NL prob", "L1 to reference", "Noisy"],
                &rows,
            );
            let _ = writeln!(out, "\nNearest to reference: {} (L1 {})", s.nearest, prob(s.nearest_distance));
        }
        Payload::Validation(v) => {
            let _ = writeln!(out, "Dump: {}", v.path);
            if let Some(m) = &v.model_id {
                let _ = writeln!(out, "Model: {m}");
            }
            if let Some(name) = &v.vocab_name {
                let _ = writeln!(out, "Vocabulary: {name}");
            }
            let _ = writeln!(out, "Entries: {}", v.entries);
            if let Some(d) = v.dense {
                let _ = writeln!(out, "Dense: {d}");
            }
            if let Some(t) = v.total_mass {
                let _ = writeln!(out, "Total mass: {t}");
            }
            if v.is_valid() {
                out.push_str("\nValid: no violations.\n");
            } else {
                let _ = writeln!(out, "\n{} violation(s):\n", v.violations.len());
                for m in &v.violations {
                    let _ = writeln!(out, "- {m}");
                }
            }
        }
    }
    out
}

fn coverage_rows(results: &[&[CoverageResult]]) -> Vec<Vec<String>> {
    let Some(first) = results.first() else {
        return Vec::new();
    };
    first
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.language.to_string(), r.total.to_string()];
            if results.len() == 1 {
                row.push(r.present.to_string());
            }
            row.extend(results.iter().map(|rs| pct(rs[i].percentage)));
            row
        })
        .collect()
}

fn coverage_md(out: &mut String, r: &CoverageReport) {
    let single = r.vocabularies.len() == 1;
    for (alternate, mode) in [(false, r.match_mode), (true, r.match_mode.other())] {
        let sets: Vec<&[CoverageResult]> = r
            .vocabularies
            .iter()
            .map(|v| if alternate { &v.alternate[..] } else { &v.results[..] })
            .collect();
        if alternate {
            let _ = writeln!(out, "\nUnder {} matching:\n", mode_name(mode));
        } else {
            let names: Vec<&str> = r.vocabularies.iter().map(|v| v.vocab_name.as_str()).collect();
            let _ = writeln!(out, "Keyword coverage ({}): {}\n", mode_name(mode), names.join(", "));
        }
        let mut header = vec!["Language".to_string(), "Keywords".to_string()];
        if single {
            header.extend(["Present".to_string(), "Coverage %".to_string()]);
        } else {
            header.extend(r.vocabularies.iter().map(|v| format!("{} (%)", v.vocab_name)));
        }
        md_table(out, &header, &coverage_rows(&sets));
    }
    for v in &r.vocabularies {
        let missing: Vec<String> = v
            .results
            .iter()
            .filter(|c| !c.missing.is_empty())
            .map(|c| format!("- {}: {}", c.language, c.missing.join(", ")))
            .collect();
        if !missing.is_empty() {
            let _ = writeln!(out, "\nMissing from {} ({}):\n", v.vocab_name, mode_name(r.match_mode));
            out.push_str(&missing.join("\n"));
            out.push('\n');
        }
    }
}

fn ranks_md(out: &mut String, r: &RanksReport) {
    let rows: Vec<Vec<String>> = r
        .vocabularies
        .iter()
        .map(|v| match &v.summary {
            Some(s) => vec![
                v.vocab_name.clone(),
                s.present.to_string(),
                format!("{:.1}", s.mean_min_rank),
                format!("{:.1}", s.median_min_rank),
            ],
            None => vec![v.vocab_name.clone(), "0".into(), "n/a".into(), "n/a".into()],
        })
        .collect();
    md_table(out, &["Vocabulary", "Keywords present", "Mean min-rank", "Median min-rank"], &rows);
    let rank = |r: Option<usize>| r.map_or_else(|| "absent".into(), |r| r.to_string());
    for v in &r.vocabularies {
        let _ = writeln!(out, "\n### {}\n", v.vocab_name);
        let rows: Vec<Vec<String>> = v
            .records
            .iter()
            .map(|k| {
                vec![
                    k.keyword.clone(),
                    k.languages.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
                    rank(k.rank_bare),
                    rank(k.rank_prefixed),
                    rank(k.min_rank),
                ]
            })
            .collect();
        md_table(out, &["Keyword", "Languages", "Bare rank", "Prefixed rank", "Min rank"], &rows);
    }
}

const CHARSET_HEADER: [&str; 4] = ["Tokenizer", "Tokens with Special Chars", "Total Tokens", "Percentage (%)"];

fn charset_md(out: &mut String, r: &CharsetReport) {
    let rows: Vec<Vec<String>> = r
        .results
        .iter()
        .map(|c| vec![c.vocab_name.clone(), thousands(c.matching), thousands(c.total), pct(c.percentage)])
        .collect();
    md_table(out, &CHARSET_HEADER, &rows);
    let _ = writeln!(out, "\nSymbols: {}\n\nPublished counts:\n", r.symbols);
    let rows: Vec<Vec<String>> = r
        .reference
        .iter()
        .map(|c| vec![c.tokenizer.to_string(), thousands(c.matching), thousands(c.total), pct(c.percentage)])
        .collect();
    md_table(out, &CHARSET_HEADER, &rows);
}

fn coldstart_md(out: &mut String, r: &ColdstartReport) {
    let m = &r.metrics;
    md_table(
        out,
        &headers(&COMPARISON_COLUMNS),
        &[with_model(&m.model_id, metric_cells(&MetricCells::from(m)))],
    );
    out.push('\n');
    md_table(
        out,
        &headers(&FORMATTING_COLUMNS),
        &[with_model(&m.model_id, formatting_cells(&FormattingCells::from(m)))],
    );
    let absent: Vec<&str> = [
        ("Tab", &m.formatting.tab),
        ("New line", &m.formatting.newline),
        ("Two spaces", &m.formatting.two_spaces),
        ("Four spaces", &m.formatting.four_spaces),
    ]
    .into_iter()
    .filter(|(_, f)| !f.present)
    .map(|(name, _)| name)
    .collect();
    out.push('\n');
    let _ = writeln!(out, "Vocabulary: {}  ", m.vocab_name);
    let _ = writeln!(out, "Temperature: {}  ", m.temperature);
    if let Some(h) = r.entropy {
        let _ = writeln!(out, "Entropy (nats): {h:.4}  ");
    }
    let _ = writeln!(out, "Control-token mass: {}  ", prob(m.control_mass));
    if m.sparse {
        let _ = writeln!(
            out,
            "Sparse dump: residual mass {}; cumulative metrics are lower bounds.  ",
            prob(m.residual_mass)
        );
    }
    if !absent.is_empty() {
        let _ = writeln!(out, "Not a single token: {}  ", absent.join(", "));
    }
}

fn comparison_md(out: &mut String, rows: &[ComparisonRow]) {
    let metric: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let cells = r
                .cells
                .as_ref()
                .map_or_else(|| vec![String::new(); COMPARISON_COLUMNS.len()], metric_cells);
            with_model(&r.model_id, cells)
        })
        .collect();
    md_table(out, &headers(&COMPARISON_COLUMNS), &metric);
    let formatting: Vec<Vec<String>> = rows
        .iter()
        .filter_map(|r| r.formatting.as_ref().map(|f| with_model(&r.model_id, formatting_cells(f))))
        .collect();
    if !formatting.is_empty() {
        out.push('\n');
        md_table(out, &headers(&FORMATTING_COLUMNS), &formatting);
    }
    let sparse: Vec<&str> = rows.iter().filter(|r| r.sparse).map(|r| r.model_id.as_str()).collect();
    if !sparse.is_empty() {
        let _ = writeln!(out, "\nLower bounds from sparse dumps: {}", sparse.join(", "));
    }
}

fn published_md(out: &mut String, t: &PublishedTable) {
    let _ = writeln!(out, "{}\n", t.caption);
    let rows: Vec<Vec<String>> = t.rows.iter().map(|r| with_model(&r.model, r.cells.clone())).collect();
    md_table(out, &t.columns, &rows);
}

fn csv(payload: &Payload) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut put = |record: Vec<String>| w.write_record(&record).expect("in-memory csv write");
    let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    let opt = |p: Option<f64>| p.map_or_else(String::new, prob);
    match payload {
        Payload::Coverage(r) => {
            put(s(&["vocab", "match_mode", "language", "keywords", "present", "coverage_percent", "missing"]));
            for v in &r.vocabularies {
                for c in v.results.iter().chain(&v.alternate) {
                    put(vec![
                        v.vocab_name.clone(),
                        mode_name(c.match_mode).into(),
                        c.language.to_string(),
                        c.total.to_string(),
                        c.present.to_string(),
                        pct(c.percentage),
                        c.missing.join(" "),
                    ]);
                }
            }
        }
        Payload::Ranks(r) => {
            put(s(&["vocab", "keyword", "languages", "rank_bare", "rank_prefixed", "min_rank"]));
            let rank = |r: Option<usize>| r.map_or_else(String::new, |r| r.to_string());
            for v in &r.vocabularies {
                for k in &v.records {
                    put(vec![
                        v.vocab_name.clone(),
                        k.keyword.clone(),
                        k.languages.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
                        rank(k.rank_bare),
                        rank(k.rank_prefixed),
                        rank(k.min_rank),
                    ]);
                }
            }
        }
        Payload::Charset(r) => {
            put(s(&CHARSET_HEADER));
            for c in &r.results {
                put(vec![c.vocab_name.clone(), c.matching.to_string(), c.total.to_string(), pct(c.percentage)]);
            }
        }
        Payload::Coldstart(r) => {
            let m = &r.metrics;
            let mut header = headers(&COMPARISON_COLUMNS);
            header.extend(FORMATTING_COLUMNS.iter().map(|c| c.to_string()));
            header.push("Sparse".into());
            put(header);
            let mut row = with_model(&m.model_id, metric_cells(&MetricCells::from(m)));
            row.extend(formatting_cells(&FormattingCells::from(m)));
            row.push(m.sparse.to_string());
            put(row);
        }
        Payload::Comparison(ComparisonReport::Computed { table }) => {
            let mut header = headers(&COMPARISON_COLUMNS);
            header.extend(FORMATTING_COLUMNS.iter().map(|c| c.to_string()));
            header.push("Sparse".into());
            put(header);
            for r in &table.rows {
                let mut row = with_model(
                    &r.model_id,
                    r.cells
                        .as_ref()
                        .map_or_else(|| vec![String::new(); COMPARISON_COLUMNS.len()], metric_cells),
                );
                row.extend(
                    r.formatting
                        .as_ref()
                        .map_or_else(|| vec![String::new(); FORMATTING_COLUMNS.len()], formatting_cells),
                );
                row.push(r.sparse.to_string());
                put(row);
            }
        }
        Payload::Comparison(ComparisonReport::Published { tables }) => {
            let mut header = vec!["Table".to_string()];
            header.extend(headers(&COMPARISON_COLUMNS));
            header.extend(FORMATTING_COLUMNS.iter().map(|c| c.to_string()));
            put(header);
            let formatting = |model: &str| {
                tables
                    .iter()
                    .filter(|t| t.kind == TableKind::Formatting)
                    .flat_map(|t| &t.rows)
                    .find(|r| r.model == model)
                    .map_or_else(|| vec![String::new(); FORMATTING_COLUMNS.len()], |r| r.cells.clone())
            };
            for t in tables.iter().filter(|t| t.kind == TableKind::Metrics) {
                for r in &t.rows {
                    let mut row = vec![t.id.clone(), r.model.clone()];
                    row.extend(r.cells.iter().cloned());
                    row.extend(formatting(&r.model));
                    put(row);
                }
            }
        }
        Payload::Delta(d) => {
            put(s(&["base_model", "compared_model", "metric", "base", "compared", "absolute", "relative_percent"]));
            for m in &d.deltas {
                put(vec![
                    d.base_model.clone(),
                    d.compared_model.clone(),
                    m.metric.name().into(),
                    opt(m.base),
                    opt(m.compared),
                    opt(m.absolute),
                    m.relative_percent.map_or_else(String::new, pct),
                ]);
            }
        }
        Payload::Sweep(sw) => {
            put(s(&["quant_label", "model", "pkp", "stp", "kap", "nlp", "l1_to_reference", "noisy", "reference", "nearest"]));
            for p in &sw.points {
                put(vec![
                    p.quant_label.map_or_else(String::new, |q| q.to_string()),
                    p.model_id.clone(),
                    prob(p.pkp),
                    prob(p.stp),
                    opt(p.kap),
                    prob(p.nlp),
                    prob(p.distance),
                    p.noisy.to_string(),
                    (p.model_id == sw.reference).to_string(),
                    (p.model_id == sw.nearest).to_string(),
                ]);
            }
        }
        Payload::Validation(v) => {
            put(s(&["path", "model_id", "entries", "dense", "total_mass", "valid", "violations"]));
            put(vec![
                v.path.clone(),
                v.model_id.clone().unwrap_or_default(),
                v.entries.to_string(),
                v.dense.map_or_else(String::new, |d| d.to_string()),
                v.total_mass.map_or_else(String::new, |t| t.to_string()),
                v.is_valid().to_string(),
                v.violations.join("; "),
            ]);
        }
    }
    let bytes = w.into_inner().expect("in-memory csv flush");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_text() {
        assert_eq!(prob(0.7246), "0.7246");
        assert_eq!(prob(0.0042), "0.004200");
        assert_eq!(prob(1.0), "1.000");
        assert_eq!(prob(1.53e-5), "1.530E-05");
        assert_eq!(prob(8.71e-105), "8.710E-105");
        assert_eq!(prob(0.0), "0");
    }

    #[test]
    fn grouping() {
        assert_eq!(thousands(151_643), "151,643");
        assert_eq!(thousands(6_585), "6,585");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1_000_000), "1,000,000");
    }

    #[test]
    fn pipes_are_escaped() {
        let mut out = String::new();
        md_table(&mut out, &["A"], &[vec!["||".into()]]);
        assert_eq!(out, "| A |\n| --- |\n| \\|\\| |\n");
    }
}
