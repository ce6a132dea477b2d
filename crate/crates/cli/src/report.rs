//! Report model and its table, JSON and CSV renderings.
//!
//! Rates, capital figures and add-ons are stored as fractions; the table
//! rendering shows them as percents with two decimals.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::OutputFormat;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub data_source: String,
    pub input_sha256: Option<String>,
    pub grade: String,
    pub seed: u64,
    pub n_sim: usize,
    pub alpha: f64,
    pub rho_mode: String,
    pub granularity: String,
    pub lgd_clamp: bool,
    pub k_hat_method: String,
    pub rate_units: &'static str,
    /// SHA-256 of the JSON report with this field and `timestamp` blanked.
    pub report_sha256: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescriptiveRow {
    pub variable: String,
    /// `fraction` for rates, `default_point` for Φ⁻¹(PD).
    pub unit: &'static str,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityRow {
    pub variable: String,
    pub kind: &'static str,
    pub n: usize,
    pub w: f64,
    pub p_value: f64,
    pub h: Option<f64>,
    pub edf: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSection {
    pub x: String,
    pub y: String,
    pub n: usize,
    pub r: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub p_value: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub adj_r2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSection {
    pub source: String,
    pub pd_hat: f64,
    pub lgd_hat: f64,
    pub k_hat: f64,
    pub sigma_k: f64,
    pub sigma_lgd: f64,
    pub rho_lgd_k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NaiveSection {
    pub pd_hat: f64,
    pub lgd_hat: f64,
    pub asset_correlation: f64,
    pub alpha: f64,
    pub var: f64,
    pub expected_loss: f64,
    pub rc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectSection {
    pub rho_mode: String,
    pub alpha: f64,
    pub rc_naive: f64,
    pub rc_correct: f64,
    pub rc_std_error: f64,
    pub el_naive: f64,
    pub el_correct: f64,
    pub excess_el: f64,
    pub add_on: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AddOnRow {
    pub scenario: String,
    pub label: &'static str,
    pub add_on: f64,
    pub add_on_std_error: f64,
    pub rc_correct: f64,
    pub el_correct: f64,
    pub excess_el: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AddOnTable {
    pub rho_mode: String,
    pub alpha: f64,
    pub rc_naive: f64,
    pub el_naive: f64,
    pub rows: Vec<AddOnRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptives: Option<Vec<DescriptiveRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normality: Option<Vec<NormalityRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_capital: Option<NaiveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_capital: Option<Vec<CorrectSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub add_on_tables: Option<Vec<AddOnTable>>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(metadata: Metadata) -> Self {
        Self {
            metadata,
            descriptives: None,
            normality: None,
            correlation: None,
            model: None,
            naive_capital: None,
            correct_capital: None,
            add_on_tables: None,
            warnings: Vec::new(),
        }
    }

    /// Fills `report_sha256` from the content with the volatile fields blanked.
    pub fn seal(&mut self) {
        let timestamp = std::mem::take(&mut self.metadata.timestamp);
        self.metadata.report_sha256.clear();
        let bytes = serde_json::to_vec(self).expect("report serializes");
        self.metadata.report_sha256 = hex(&Sha256::digest(&bytes));
        self.metadata.timestamp = timestamp;
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => render_csv(self),
            OutputFormat::Table => render_table(self),
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn pvalue(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

/// Left-aligned first column, right-aligned rest.
fn grid(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, cell) in cells.iter().enumerate() {
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                out.push_str(cell);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str("  ");
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn render_table(report: &Report) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "irb-risk {} | {} | grade {} | data: {}", m.version, m.command, m.grade, m.data_source);
    if let Some(digest) = &m.input_sha256 {
        let _ = writeln!(out, "input sha256 {digest}");
    }
    let _ = writeln!(
        out,
        "alpha {} | n_sim {} | seed {} | rho {} | obligors {} | lgd clamp {} | k-hat {}",
        m.alpha, m.n_sim, m.seed, m.rho_mode, m.granularity, m.lgd_clamp, m.k_hat_method
    );
    let _ = writeln!(out, "report sha256 {} | generated {}", m.report_sha256, m.timestamp);

    if let Some(rows) = &report.descriptives {
        out.push_str("\nDescriptive statistics (rates in percent, k = probit of PD)\n");
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let f = |x: f64| if r.unit == "fraction" { pct(x) } else { format!("{x:.3}") };
                vec![r.variable.clone(), r.n.to_string(), f(r.min), f(r.max), f(r.mean), f(r.median), f(r.std)]
            })
            .collect();
        out.push_str(&grid(&["", "n", "min", "max", "mean", "median", "std"], &cells));
    }
    if let Some(rows) = &report.normality {
        out.push_str("\nShapiro-Wilk normality tests\n");
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.variable.clone(),
                    r.n.to_string(),
                    format!("{:.3}", r.w),
                    format!("{:.3}", r.p_value),
                    r.h.map_or_else(String::new, |h| format!("{h:.3}")),
                    r.edf.map_or_else(String::new, |e| format!("{e:.3}")),
                ]
            })
            .collect();
        out.push_str(&grid(&["", "n", "W", "p-value", "H", "edf"], &cells));
    }
    if let Some(c) = &report.correlation {
        let _ = writeln!(out, "\nPearson correlation {}-{} (n = {})", c.y, c.x, c.n);
        out.push_str(&grid(
            &["", "r", "95% CI", "p-value"],
            &[vec![
                format!("{}-{}", c.y, c.x),
                format!("{:.3}", c.r),
                format!("({:.3}, {:.3})", c.ci95_low, c.ci95_high),
                pvalue(c.p_value),
            ]],
        ));
        let _ = writeln!(
            out,
            "OLS {} on {}: slope {:.4}, intercept {:.4}, R2 {:.3}, adjusted R2 {:.3}",
            c.y, c.x, c.slope, c.intercept, c.r2, c.adj_r2
        );
    }
    if let Some(model) = &report.model {
        let _ = writeln!(out, "\nUncertainty model ({})", model.source);
        out.push_str(&grid(
            &["PD", "LGD", "k-hat", "sigma_k", "sigma_LGD", "rho_LGD-k"],
            &[vec![
                pct(model.pd_hat),
                pct(model.lgd_hat),
                format!("{:.3}", model.k_hat),
                format!("{:.3}", model.sigma_k),
                pct(model.sigma_lgd),
                format!("{:.3}", model.rho_lgd_k),
            ]],
        ));
    }
    if let Some(n) = &report.naive_capital {
        let _ = writeln!(out, "\nNaive capital (fractions of exposure), alpha = {}", n.alpha);
        out.push_str(&grid(
            &["PD", "LGD", "asset corr", "VaR", "EL", "RC"],
            &[vec![
                pct(n.pd_hat),
                pct(n.lgd_hat),
                format!("{:.5}", n.asset_correlation),
                format!("{:.4}", n.var),
                format!("{:.4}", n.expected_loss),
                format!("{:.4}", n.rc),
            ]],
        ));
    }
    if let Some(sections) = &report.correct_capital {
        out.push_str("\nCapital with parameter uncertainty (fractions of exposure)\n");
        let cells: Vec<Vec<String>> = sections
            .iter()
            .map(|c| {
                vec![
                    c.rho_mode.clone(),
                    c.alpha.to_string(),
                    format!("{:.4}", c.rc_naive),
                    format!("{:.4}", c.rc_correct),
                    format!("{:.4}", c.rc_std_error),
                    format!("{:.2e}", c.excess_el),
                    pct(c.add_on),
                ]
            })
            .collect();
        out.push_str(&grid(&["rho mode", "alpha", "RC naive", "RC correct", "RC s.e.", "excess EL", "add-on"], &cells));
        for c in sections {
            let _ = writeln!(
                out,
                "excess expected loss ({} rho, alpha {}): {:.2e} = {:.2} x 1e-4",
                c.rho_mode,
                c.alpha,
                c.excess_el,
                c.excess_el * 1e4
            );
        }
    }
    if let Some(tables) = &report.add_on_tables {
        out.push_str("\nCapital add-on by source of uncertainty (percent of naive RC)\n");
        let mut header = vec!["scenario".to_string()];
        header.extend(tables.iter().map(|t| format!("{} rho, alpha {}", t.rho_mode, t.alpha)));
        let scenarios: Vec<&AddOnRow> = tables.first().map(|t| t.rows.iter().collect()).unwrap_or_default();
        let cells: Vec<Vec<String>> = scenarios
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut cells = vec![row.label.to_string()];
                cells.extend(tables.iter().map(|t| {
                    let r = &t.rows[i];
                    format!("{} ± {}", pct(r.add_on), pct(r.add_on_std_error))
                }));
                cells
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.push_str(&grid(&header, &cells));
    }
    if !report.warnings.is_empty() {
        out.push_str("\nWarnings\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Long format: one `section,key,value` record per leaf.
fn render_csv(report: &Report) -> String {
    let value = serde_json::to_value(report).expect("report serializes");
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["section", "key", "value"]).expect("in-memory write");
    if let Value::Object(sections) = value {
        for (section, body) in &sections {
            let mut leaves = Vec::new();
            flatten("", body, &mut leaves);
            for (key, v) in leaves {
                writer.write_record([section.as_str(), key.as_str(), v.as_str()]).expect("in-memory write");
            }
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory write")).expect("utf-8")
}
