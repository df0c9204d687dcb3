//! CSV and aligned-text report tables.
//!
//! Column order is fixed by the `*_COLUMNS` constants. Numbers use four
//! decimals; absent values are empty in CSV and `-` in text.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::harness::read_trajectory_dir;
use crate::tasks::TaskCatalog;

use super::{behavior, reliability, BehaviorReport, ReliabilityReport, RewardSample, StdConvention};

pub const RELIABILITY_COLUMNS: [&str; 11] = [
    "agent",
    "task",
    "d",
    "n",
    "pass_at_1",
    "fixed_std",
    "overall_std",
    "ratio_std",
    "fixed_mad",
    "overall_mad",
    "ratio_mad",
];

pub const CELL_COLUMNS: [&str; 7] = ["agent", "task", "variation", "n", "pass_at_1", "std", "mad"];

pub const BEHAVIOR_COLUMNS: [&str; 8] = [
    "agent",
    "variation",
    "runs",
    "avg_loops",
    "avg_invalid",
    "intent_rate",
    "loops_when_success",
    "loops_when_failure",
];

/// Paths written by [`emit_tables`], CSV and text for each table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFiles {
    pub paths: Vec<PathBuf>,
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Table {
    name: &'static str,
    header: &'static [&'static str],
    /// Leading columns that hold text; the rest are right-aligned.
    text_cols: usize,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }

    fn text(&self) -> String {
        let cell = |s: &str| if s.is_empty() { "-".to_string() } else { s.to_string() };
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate() {
                widths[i] = widths[i].max(cell(c).chars().count());
            }
        }
        let line = |cells: Vec<String>| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i < self.text_cols {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(self.header.iter().map(|h| h.to_string()).collect());
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r.iter().map(|c| cell(c)).collect()));
            out.push('\n');
        }
        out
    }
}

fn tables(rel: &ReliabilityReport, beh: &BehaviorReport) -> Vec<Table> {
    let summary = rel
        .rows
        .iter()
        .map(|r| {
            vec![
                r.agent.clone(),
                r.task.clone(),
                r.d.to_string(),
                r.n.to_string(),
                num(r.pass_at_1),
                opt(r.fixed_std),
                opt(r.overall_std),
                opt(r.ratio_std),
                opt(r.fixed_mad),
                opt(r.overall_mad),
                opt(r.ratio_mad),
            ]
        })
        .collect();
    let cells = rel
        .rows
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(|c| {
                vec![
                    r.agent.clone(),
                    r.task.clone(),
                    c.variation.clone(),
                    c.n.to_string(),
                    num(c.pass_at_1),
                    opt(c.std),
                    opt(c.mad),
                ]
            })
        })
        .collect();
    let behavior = beh
        .rows
        .iter()
        .map(|b| {
            vec![
                b.agent.clone(),
                b.variation.clone(),
                b.runs.to_string(),
                num(b.avg_loops),
                num(b.avg_invalid),
                opt(b.intent_rate),
                opt(b.loops_when_success),
                opt(b.loops_when_failure),
            ]
        })
        .collect();
    vec![
        Table { name: "reliability", header: &RELIABILITY_COLUMNS, text_cols: 2, rows: summary },
        Table { name: "cells", header: &CELL_COLUMNS, text_cols: 3, rows: cells },
        Table { name: "behavior", header: &BEHAVIOR_COLUMNS, text_cols: 2, rows: behavior },
    ]
}

/// Write `reliability`, `cells` and `behavior` tables as `.csv` and `.txt`.
pub fn emit_tables(rel: &ReliabilityReport, beh: &BehaviorReport, out_dir: &Path) -> io::Result<TableFiles> {
    fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for t in tables(rel, beh) {
        let csv_path = out_dir.join(format!("{}.csv", t.name));
        fs::write(&csv_path, t.csv()?)?;
        let txt_path = out_dir.join(format!("{}.txt", t.name));
        let mut text = format!("# std convention: {}\n", rel.convention);
        text.push_str(&t.text());
        fs::write(&txt_path, text)?;
        paths.push(csv_path);
        paths.push(txt_path);
    }
    Ok(TableFiles { paths })
}

/// Read every trajectory file in `in_dir` and write report tables to `out_dir`.
pub fn analyze_dir(in_dir: &Path, out_dir: &Path, convention: StdConvention, tasks: &TaskCatalog) -> io::Result<TableFiles> {
    let records = read_trajectory_dir(in_dir)?;
    let samples: Vec<RewardSample> = records.iter().filter_map(RewardSample::from_record).collect();
    let rel = reliability(&samples, convention).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let beh = behavior(&records, |id| tasks.get(id).ok());
    emit_tables(&rel, &beh, out_dir)
}
