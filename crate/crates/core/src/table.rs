//! Emits the six-approach results table as markdown, CSV or JSON.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dgp::GroundTruth;
use crate::error::{LabError, Result};
use crate::estimators::{ApproachRegistry, Estimand};
use crate::harness::SummaryTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Markdown => "md",
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl FromStr for TableFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(LabError::Config(format!("unknown table format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub row: usize,
    pub approach: String,
    pub description: String,
    pub formula: String,
    pub estimand: Estimand,
    pub estimand_label: String,
    /// Ground truth for the row's estimand; `None` when it has none.
    pub value_simulated_kg: Option<f64>,
    pub median_kg: f64,
    pub lo_kg: f64,
    pub hi_kg: f64,
}

impl Table1Row {
    /// "median (lo, hi)" at one decimal.
    pub fn estimate_text(&self) -> String {
        format!(
            "{} ({}, {})",
            fmt1(self.median_kg),
            fmt1(self.lo_kg),
            fmt1(self.hi_kg)
        )
    }

    pub fn simulated_text(&self) -> String {
        self.value_simulated_kg
            .map_or_else(|| "N/A".to_string(), |v| format!("{}kg", fmt1(v)))
    }
}

/// One decimal, without a negative zero.
pub fn fmt1(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

/// Table rows in registry order, joined with the summary by approach name.
pub fn table1_rows(summary: &SummaryTable, truth: &GroundTruth) -> Result<Vec<Table1Row>> {
    let registry = ApproachRegistry::table1();
    registry
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let s = summary
                .get(a.name())
                .ok_or_else(|| LabError::UnknownApproach(a.name().to_string()))?;
            let estimand = a.estimand();
            Ok(Table1Row {
                row: i + 1,
                approach: a.name().to_string(),
                description: a.description().to_string(),
                formula: a.formula().to_string(),
                estimand,
                estimand_label: estimand.label().to_string(),
                value_simulated_kg: match estimand {
                    Estimand::Obscure => None,
                    Estimand::ControlledDirect => Some(truth.cde_kg),
                    Estimand::Total => Some(truth.tce_kg),
                },
                median_kg: s.median_kg,
                lo_kg: s.lo_kg,
                hi_kg: s.hi_kg,
            })
        })
        .collect()
}

pub fn emit_table1(summary: &SummaryTable, truth: &GroundTruth, format: TableFormat) -> Result<String> {
    let rows = table1_rows(summary, truth)?;
    Ok(match format {
        TableFormat::Markdown => {
            let mut out = String::from(
                "| # | Approach | Formula | Implied estimand | Value simulated | Value estimated (95% SI) |\n\
                 |---|---|---|---|---|---|\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "| {} | {} | `{}` | {} | {} | {} |\n",
                    r.row,
                    r.description,
                    r.formula.replace('|', "\\|"),
                    r.estimand_label,
                    r.simulated_text(),
                    r.estimate_text()
                ));
            }
            out
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "row",
                "approach",
                "estimand",
                "value_simulated_kg",
                "median_kg",
                "lo_kg",
                "hi_kg",
            ])?;
            for r in &rows {
                w.write_record([
                    r.row.to_string(),
                    r.approach.clone(),
                    serde_json::to_value(r.estimand)?
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    r.value_simulated_kg.map_or(String::new(), |v| v.to_string()),
                    r.median_kg.to_string(),
                    r.lo_kg.to_string(),
                    r.hi_kg.to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
                .expect("csv output is utf-8")
        }
        TableFormat::Json => serde_json::to_string_pretty(&rows)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{summarize_values, SummaryTable};

    fn summary() -> SummaryTable {
        let vals = [
            ("approach1", [-0.31, -0.02, 0.29]),
            ("approach2", [3.88, 4.21, 4.52]),
            ("gcomp_cde", [4.67, 5.0, 5.34]),
            ("approach4", [3.88, 4.21, 4.52]),
            ("approach5", [9.68, 10.0, 10.34]),
            ("gcomp_tce", [9.68, 10.0, 10.34]),
        ];
        SummaryTable {
            config: None,
            approaches: vals
                .iter()
                .map(|(n, v)| summarize_values(n, v).unwrap())
                .collect(),
            elapsed_secs: None,
        }
    }

    fn truth() -> GroundTruth {
        GroundTruth {
            tce_kg: 10.0,
            cde_kg: 5.0,
            y0_contrast_kg: 10.0,
        }
    }

    #[test]
    fn markdown_rows() {
        let md = emit_table1(&summary(), &truth(), TableFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[2].contains("N/A") && lines[2].contains("0.0 (-0.3, 0.3)"));
        assert!(lines[2].contains("Obscure when X and Y0 are correlated"));
        assert!(lines[4].contains("5.0kg") && lines[4].contains("5.0 (4.7, 5.3)"));
        assert!(lines[6].contains("10.0kg") && lines[6].contains("Total causal effect"));
    }

    #[test]
    fn csv_and_json_agree() {
        let csv_text = emit_table1(&summary(), &truth(), TableFormat::Csv).unwrap();
        let json_text = emit_table1(&summary(), &truth(), TableFormat::Json).unwrap();
        let rows: Vec<Table1Row> = serde_json::from_str(&json_text).unwrap();
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let mut count = 0;
        for (rec, row) in reader.records().zip(&rows) {
            let rec = rec.unwrap();
            assert_eq!(&rec[1], row.approach);
            let sim: Option<f64> = if rec[3].is_empty() { None } else { Some(rec[3].parse().unwrap()) };
            assert_eq!(sim, row.value_simulated_kg);
            assert_eq!(rec[4].parse::<f64>().unwrap(), row.median_kg);
            assert_eq!(rec[5].parse::<f64>().unwrap(), row.lo_kg);
            assert_eq!(rec[6].parse::<f64>().unwrap(), row.hi_kg);
            count += 1;
        }
        assert_eq!(count, 6);
    }

    #[test]
    fn negative_zero_is_hidden() {
        assert_eq!(fmt1(-0.04), "0.0");
        assert_eq!(fmt1(-0.05), "-0.1");
        assert_eq!(fmt1(4.2), "4.2");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("md".parse::<TableFormat>().unwrap(), TableFormat::Markdown);
        assert!("xml".parse::<TableFormat>().is_err());
    }
}
