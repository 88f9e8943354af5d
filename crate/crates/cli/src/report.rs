//! Result rows, CSV persistence and aggregate rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sparseseq_core::metrics::{summarize, Summary};

use crate::grid::RowKey;

/// One trained model scored on the test split. Scores are in percent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: String,
    pub imbalance: String,
    pub missing: f64,
    pub model: String,
    pub mode: String,
    pub shift: usize,
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub f1_weighted: Option<f64>,
    pub f1_minority: Option<f64>,
    pub selected_stage: String,
    pub selected_epoch: usize,
    pub wall_time: f64,
    pub error: String,
}

impl ResultRow {
    pub fn key(&self) -> RowKey {
        (self.cell.clone(), self.model.clone(), self.mode.clone(), self.shift, self.run)
    }

    /// Column label in aggregated output.
    pub fn label(&self) -> String {
        if self.mode == "scratch" {
            self.model.clone()
        } else {
            format!("{} n={} {}", self.model, self.shift, self.mode)
        }
    }

    pub fn metric(&self, m: Metric) -> Option<f64> {
        if !self.error.is_empty() {
            return None;
        }
        match m {
            Metric::Auroc => self.auroc,
            Metric::Auprc => self.auprc,
            Metric::F1Weighted => self.f1_weighted,
            Metric::F1Minority => self.f1_minority,
        }
    }

    /// Equality ignoring timing.
    pub fn same_result(&self, other: &ResultRow) -> bool {
        ResultRow { wall_time: 0.0, ..self.clone() } == ResultRow { wall_time: 0.0, ..other.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Auroc,
    Auprc,
    F1Weighted,
    F1Minority,
}

impl FromStr for Metric {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auroc" => Ok(Metric::Auroc),
            "auprc" => Ok(Metric::Auprc),
            "f1" | "f1-weighted" | "f1_weighted" => Ok(Metric::F1Weighted),
            "f1-minority" | "f1_minority" => Ok(Metric::F1Minority),
            other => anyhow::bail!("unknown metric '{other}'"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn read_csv(path: &Path) -> anyhow::Result<Self> {
        let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<ResultRow>, _>>()
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(Self { rows })
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn from_csv(text: &str) -> anyhow::Result<Self> {
        let rows = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| !r.error.is_empty())
    }

    /// Metric values grouped by `(imbalance, missing, label)` in first-seen order.
    pub fn groups(&self, metric: Metric) -> Vec<((String, f64, String), Vec<f64>)> {
        let mut order: Vec<(String, f64, String)> = Vec::new();
        let mut vals: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.imbalance.clone(), r.missing, r.label());
            let i = match order.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    order.push(key);
                    order.len() - 1
                }
            };
            let slot = vals.entry(i).or_default();
            if let Some(v) = r.metric(metric) {
                slot.push(v);
            }
        }
        order
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, vals.remove(&i).unwrap_or_default()))
            .collect()
    }

    /// Summary of `metric` for one cell and label.
    pub fn summary(&self, imbalance: &str, missing: f64, label: &str, metric: Metric) -> Option<Summary> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.imbalance == imbalance && r.missing == missing && r.label() == label)
            .filter_map(|r| r.metric(metric))
            .collect();
        summarize(&vals)
    }
}

/// Mean ± population std per cell (rows) and model (columns).
pub fn render_table(table: &ResultsTable, metric: Metric) -> String {
    let groups = table.groups(metric);
    let mut labels: Vec<String> = Vec::new();
    let mut cells: Vec<(String, f64)> = Vec::new();
    for ((imb, miss, label), _) in &groups {
        if !labels.contains(label) {
            labels.push(label.clone());
        }
        if !cells.iter().any(|(i, m)| i == imb && m == miss) {
            cells.push((imb.clone(), *miss));
        }
    }
    let lookup: BTreeMap<(String, u64, String), &Vec<f64>> = groups
        .iter()
        .map(|((i, m, l), v)| ((i.clone(), m.to_bits(), l.clone()), v))
        .collect();

    let mut header = vec!["imbalance".to_string(), "missing".to_string()];
    header.extend(labels.iter().cloned());
    let mut body: Vec<Vec<String>> = Vec::new();
    for (imb, miss) in &cells {
        let mut line = vec![imb.clone(), format!("{:.0}%", miss * 100.0)];
        for l in &labels {
            let s = lookup
                .get(&(imb.clone(), miss.to_bits(), l.clone()))
                .and_then(|v| summarize(v))
                .map_or_else(|| "n/a".to_string(), |s| s.pm(1));
            line.push(s);
        }
        body.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            std::iter::once(&header)
                .chain(&body)
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let fmt_line = |out: &mut String, cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    fmt_line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    fmt_line(&mut out, &rule);
    for line in &body {
        fmt_line(&mut out, line);
    }
    let failed = table.failures().count();
    if failed > 0 {
        let _ = writeln!(out, "\n{failed} run(s) failed; see the error column of the CSV");
    }
    out
}

/// Median, min and max per imbalance panel, model and missing rate.
pub fn render_plotdata(table: &ResultsTable, metric: Metric) -> anyhow::Result<String> {
    #[derive(Serialize)]
    struct Point<'a> {
        panel: &'a str,
        model: &'a str,
        missing: f64,
        median: f64,
        min: f64,
        max: f64,
        n: usize,
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for ((imb, miss, label), vals) in table.groups(metric) {
        if let Some(s) = summarize(&vals) {
            w.serialize(Point {
                panel: &imb,
                model: &label,
                missing: miss,
                median: s.median,
                min: s.min,
                max: s.max,
                n: s.n,
            })?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, run: usize, auprc: f64) -> ResultRow {
        ResultRow {
            cell: "1:20|0.3".into(),
            imbalance: "1:20".into(),
            missing: 0.3,
            model: model.into(),
            mode: "scratch".into(),
            method: "cw".into(),
            run,
            seed: 11 + run as u64,
            auroc: Some(90.0),
            auprc: Some(auprc),
            f1_weighted: Some(80.0),
            f1_minority: Some(50.0),
            selected_stage: "scratch".into(),
            selected_epoch: 3,
            wall_time: 1.5,
            ..ResultRow::default()
        }
    }

    #[test]
    fn table_shows_population_std() {
        let t = ResultsTable {
            rows: vec![row("gru", 0, 10.0), row("gru", 1, 20.0), row("gru", 2, 30.0)],
        };
        let text = render_table(&t, Metric::Auprc);
        assert!(text.contains("20.0 ± 8.2"), "{text}");
        assert!(text.contains("1:20") && text.contains("30%"));
    }

    #[test]
    fn plotdata_statistics() {
        let t = ResultsTable {
            rows: vec![row("gru", 0, 30.0), row("gru", 1, 10.0), row("gru", 2, 20.0)],
        };
        let text = render_plotdata(&t, Metric::Auprc).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "panel,model,missing,median,min,max,n");
        assert_eq!(lines.next().unwrap(), "1:20,gru,0.3,20.0,10.0,30.0,3");
    }

    #[test]
    fn csv_round_trip() {
        let mut failed = row("gru-d", 0, 0.0);
        failed.auprc = None;
        failed.error = "boom, with \"quotes\"".into();
        let t = ResultsTable {
            rows: vec![row("gru", 0, 12.345678901234567), failed],
        };
        let back = ResultsTable::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn failed_rows_are_not_averaged() {
        let mut bad = row("gru", 1, 0.0);
        bad.error = "x".into();
        let t = ResultsTable {
            rows: vec![row("gru", 0, 40.0), bad],
        };
        let s = t.summary("1:20", 0.3, "gru", Metric::Auprc).unwrap();
        assert_eq!((s.mean, s.n), (40.0, 1));
        assert!(render_table(&t, Metric::Auprc).contains("1 run(s) failed"));
    }
}
