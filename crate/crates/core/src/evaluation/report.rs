//! Per-(strategy, page type) aggregation and table rendering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::metrics::{corpus_bleu, pass_at_k, BleuStats};
use crate::error::{Error, Result};
use crate::promptgen::ShotStrategy;
use crate::task::PageType;

pub const REPORT_FORMAT: &str = "dashgen-report";
pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_KS: [u64; 3] = [1, 3, 5];
/// Values this close to the best count as tied for it.
pub const BEST_TOLERANCE: f64 = 1e-12;

/// Test and metric results for the samples drawn for one dataset entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub concat_id: String,
    pub page_id: String,
    pub page_type: PageType,
    pub strategy: ShotStrategy,
    /// Samples generated.
    pub n: u64,
    /// Samples that passed every test.
    pub c: u64,
    /// Per-sample BLEU in [0, 1].
    #[serde(default)]
    pub bleu: Vec<f64>,
    /// Per-sample ChrF in [0, 1].
    #[serde(default)]
    pub chrf: Vec<f64>,
    /// Per-sample TER, scaled by 100.
    #[serde(default)]
    pub ter: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bleu_stats: Vec<BleuStats>,
}

impl EvalRecord {
    /// A record with pass counts only.
    pub fn tally(page_id: &str, page_type: PageType, strategy: ShotStrategy, n: u64, c: u64) -> Self {
        EvalRecord {
            concat_id: String::new(),
            page_id: page_id.to_string(),
            page_type,
            strategy,
            n,
            c,
            bleu: vec![],
            chrf: vec![],
            ter: vec![],
            bleu_stats: vec![],
        }
    }

    pub fn check(&self) -> Result<()> {
        let id = &self.page_id;
        if self.n == 0 || self.c > self.n {
            return Err(Error::Input(format!("{id}: needs 0 <= c <= n and n >= 1, got n={} c={}", self.n, self.c)));
        }
        let unit = |v: &f64| v.is_finite() && (0.0..=1.0).contains(v);
        if !self.bleu.iter().all(unit) || !self.chrf.iter().all(unit) {
            return Err(Error::Input(format!("{id}: BLEU and ChrF must lie in [0, 1]")));
        }
        if !self.ter.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Input(format!("{id}: TER must be finite and non-negative")));
        }
        Ok(())
    }
}

/// How pass@k combines the entries of a row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassMode {
    /// pass@k per entry, averaged over entries.
    #[default]
    PerEntry,
    /// pass@k of the summed (n, c).
    Pooled,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuMode {
    /// Sentence BLEU, averaged like the other metrics.
    #[default]
    Sentence,
    /// BLEU over the row's pooled n-gram statistics.
    Corpus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub ks: Vec<u64>,
    pub pass_mode: PassMode,
    pub bleu_mode: BleuMode,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            ks: DEFAULT_KS.to_vec(),
            pass_mode: PassMode::default(),
            bleu_mode: BleuMode::default(),
        }
    }
}

/// A report column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    /// Index into the report's `ks`.
    PassAt(usize),
    Bleu,
    Chrf,
    Ter,
}

impl Column {
    pub fn higher_is_better(self) -> bool {
        self != Column::Ter
    }

    fn arrow(self) -> &'static str {
        if self.higher_is_better() {
            "↑"
        } else {
            "↓"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: ShotStrategy,
    pub page_type: PageType,
    pub entries: usize,
    pub samples: u64,
    /// Aligned with the report's `ks`; `None` where some entry (or, pooled,
    /// the whole row) has fewer than k samples.
    pub pass_at: Vec<Option<f64>>,
    /// Means; `None` when no record in the row carries the metric.
    pub bleu: Option<f64>,
    pub chrf: Option<f64>,
    pub ter: Option<f64>,
    /// Columns in which this row is best among the strategies for its page
    /// type.
    pub best: BTreeSet<Column>,
}

impl ReportRow {
    pub fn value(&self, col: Column) -> Option<f64> {
        match col {
            Column::PassAt(i) => self.pass_at.get(i).copied().flatten(),
            Column::Bleu => self.bleu,
            Column::Chrf => self.chrf,
            Column::Ter => self.ter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub options: ReportOptions,
    /// Ordered by strategy, then page type.
    pub rows: Vec<ReportRow>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Mean over entries of each entry's own mean, skipping entries without
/// values.
fn entry_mean(records: &[&EvalRecord], values: impl Fn(&EvalRecord) -> &[f64]) -> Option<f64> {
    mean(records.iter().filter_map(|r| mean(values(r).iter().copied())))
}

fn build_row(strategy: ShotStrategy, page_type: PageType, records: &[&EvalRecord], options: &ReportOptions) -> Result<ReportRow> {
    let pass_at = options
        .ks
        .iter()
        .map(|&k| match options.pass_mode {
            PassMode::PerEntry => {
                if records.iter().any(|r| r.n < k) {
                    return Ok(None);
                }
                let per: Vec<f64> = records
                    .iter()
                    .map(|r| pass_at_k(r.n, r.c, k))
                    .collect::<Result<_>>()?;
                Ok(mean(per))
            }
            PassMode::Pooled => {
                let n = records.iter().map(|r| r.n).sum();
                let c = records.iter().map(|r| r.c).sum();
                if n < k {
                    return Ok(None);
                }
                pass_at_k(n, c, k).map(Some)
            }
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let bleu = match options.bleu_mode {
        BleuMode::Sentence => entry_mean(records, |r| &r.bleu),
        BleuMode::Corpus => {
            let stats: Vec<BleuStats> = records.iter().flat_map(|r| r.bleu_stats.iter().cloned()).collect();
            if stats.is_empty() {
                None
            } else if records.iter().any(|r| r.bleu_stats.len() != r.bleu.len()) {
                return Err(Error::Input(
                    "corpus BLEU needs n-gram statistics for every scored sample".into(),
                ));
            } else {
                Some(corpus_bleu(&stats)?)
            }
        }
    };
    Ok(ReportRow {
        strategy,
        page_type,
        entries: records.len(),
        samples: records.iter().map(|r| r.n).sum(),
        pass_at,
        bleu,
        chrf: entry_mean(records, |r| &r.chrf),
        ter: entry_mean(records, |r| &r.ter),
        best: BTreeSet::new(),
    })
}

/// One row per (strategy, page type) present in `records`.
///
/// Best-value markers compare the strategies within each page type, per
/// column; ties are all marked.
pub fn aggregate_report(records: &[EvalRecord], options: &ReportOptions) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::Input("no evaluation records".into()));
    }
    if options.ks.is_empty() || options.ks.contains(&0) {
        return Err(Error::Parameter("ks must be non-empty and positive".into()));
    }
    let mut groups: BTreeMap<(ShotStrategy, PageType), Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        r.check()?;
        groups.entry((r.strategy, r.page_type)).or_default().push(r);
    }
    let mut rows = groups
        .iter()
        .map(|(&(s, t), rs)| build_row(s, t, rs, options))
        .collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<Column> = (0..options.ks.len()).map(Column::PassAt).collect();
    columns.extend([Column::Bleu, Column::Chrf, Column::Ter]);
    for t in PageType::ALL {
        for &col in &columns {
            let values: Vec<(usize, f64)> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.page_type == t)
                .filter_map(|(i, r)| r.value(col).map(|v| (i, v)))
                .collect();
            let best = values.iter().map(|&(_, v)| v).reduce(|a, b| {
                if col.higher_is_better() {
                    a.max(b)
                } else {
                    a.min(b)
                }
            });
            if let Some(best) = best {
                for (i, v) in values {
                    if (v - best).abs() <= BEST_TOLERANCE {
                        rows[i].best.insert(col);
                    }
                }
            }
        }
    }
    Ok(MetricReport {
        options: options.clone(),
        rows,
    })
}

pub fn strategy_label(s: ShotStrategy) -> String {
    match s {
        ShotStrategy::Zero => "Zero-Shot".into(),
        ShotStrategy::One => "One-Shot".into(),
        ShotStrategy::Few(3) => "Few-Shots".into(),
        ShotStrategy::Few(k) => format!("Few-Shots ({k})"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ReportDocument<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    report: T,
}

impl MetricReport {
    pub fn row(&self, strategy: ShotStrategy, page_type: PageType) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.page_type == page_type)
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut c: Vec<Column> = (0..self.options.ks.len()).map(Column::PassAt).collect();
        c.extend([Column::Bleu, Column::Chrf, Column::Ter]);
        c
    }

    pub fn header(&self, col: Column) -> String {
        match col {
            Column::PassAt(i) => format!("Pass@{}", self.options.ks[i]),
            Column::Bleu => "BLEU".into(),
            Column::Chrf => "ChrF".into(),
            Column::Ter => "TER".into(),
        }
    }

    /// Pass@k with three decimals; BLEU and ChrF scaled by 100 and TER as
    /// is, with two decimals. Best values carry an arrow.
    pub fn cell(&self, row: &ReportRow, col: Column) -> String {
        let Some(v) = row.value(col) else {
            return "-".into();
        };
        let mut text = match col {
            Column::PassAt(_) => format!("{v:.3}"),
            Column::Bleu | Column::Chrf => format!("{:.2}", v * 100.0),
            Column::Ter => format!("{v:.2}"),
        };
        if row.best.contains(&col) {
            text.push(' ');
            text.push_str(col.arrow());
        }
        text
    }

    /// Cells of one row: strategy, page type, then every column.
    pub fn row_cells(&self, row: &ReportRow) -> Vec<String> {
        let mut cells = vec![
            strategy_label(row.strategy),
            row.page_type.display_name().to_string(),
        ];
        cells.extend(self.columns().into_iter().map(|c| self.cell(row, c)));
        cells
    }

    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let mut table = vec![{
            let mut h = vec!["Strategy".to_string(), "Page type".to_string()];
            h.extend(self.columns().into_iter().map(|c| self.header(c)));
            h
        }];
        table.extend(self.rows.iter().map(|r| self.row_cells(r)));
        let cols = table[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|i| table.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (n, r) in table.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if n == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                out.push_str(&rule.join("  "));
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = ReportDocument {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            report: self,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument<MetricReport> =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("report: {e}")))?;
        if doc.format != REPORT_FORMAT || doc.version != REPORT_VERSION {
            return Err(Error::Format(format!(
                "expected {REPORT_FORMAT} v{REPORT_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.report)
    }
}
