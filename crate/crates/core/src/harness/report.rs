//! Rendering of [`ReportTable`]s.

use super::experiment::{MetricSummary, ReportRow, ReportTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

const METRICS: [&str; 3] = ["eer", "far", "iser"];

/// Relative change from `baseline` to `value` as a whole percentage, e.g.
/// `-42%`. Positive changes carry a `+`; a zero baseline gives `n/a` unless
/// both are zero.
pub fn delta_percent(baseline: f64, value: f64) -> String {
    if baseline == 0.0 {
        return if value == 0.0 { "0%".into() } else { "n/a".into() };
    }
    let pct = ((value - baseline) / baseline * 100.0).round();
    if pct == 0.0 {
        "0%".into()
    } else if pct > 0.0 {
        format!("+{pct}%")
    } else {
        format!("{pct}%")
    }
}

fn header() -> Vec<String> {
    let mut h = vec!["algorithm".to_string(), "N".to_string()];
    for m in METRICS {
        for stat in ["avg", "std", "min"] {
            h.push(format!("{m}_{stat}"));
        }
    }
    for m in METRICS {
        h.push(format!("{m}_delta"));
    }
    h
}

fn summaries(row: &ReportRow) -> [&MetricSummary; 3] {
    [&row.eer, &row.far, &row.iser]
}

fn cells(row: &ReportRow, baseline: Option<&ReportRow>) -> Vec<String> {
    let mut out = vec![row.algorithm.tag().to_string(), row.n.to_string()];
    for s in summaries(row) {
        out.extend([s.avg, s.std, s.min].iter().map(|v| format!("{v:.4}")));
    }
    for (i, s) in summaries(row).into_iter().enumerate() {
        out.push(match baseline {
            Some(b) => delta_percent(summaries(b)[i].min, s.min),
            None => "n/a".into(),
        });
    }
    out
}

/// Renders a table. Columns: algorithm, N, then avg/std/min of EER, FAR and
/// ISER, then the change of each metric's min relative to the
/// one_hot_softmax row.
pub fn emit_report(table: &ReportTable, format: ReportFormat) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::invalid("report table is empty"));
    }
    let baseline = table.baseline();
    let rows: Vec<Vec<String>> = table.rows.iter().map(|r| cells(r, baseline)).collect();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header())?;
            for r in &rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let line = |cols: &[String]| format!("| {} |\n", cols.join(" | "));
            let h = header();
            let mut out = line(&h);
            out.push_str(&line(&vec!["---".to_string(); h.len()]));
            for r in &rows {
                out.push_str(&line(r));
            }
            Ok(out)
        }
    }
}
