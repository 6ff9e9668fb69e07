use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::agents::SimReport;
use crate::model::{format_hhmm, Minutes, Timetable, TrainId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub train: TrainId,
    pub number: String,
    pub distributed_delay: Minutes,
    pub baseline_delay: Option<Minutes>,
    pub terminal_arrival: Minutes,
    pub decisions: Vec<String>,
    pub cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelayReport {
    pub scenario: String,
    pub rows: Vec<ReportRow>,
    pub distributed_total: Minutes,
    pub baseline_total: Option<Minutes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Delimited,
}

/// One row per train that any event touched in either run.
pub fn build_report(
    scenario: &str,
    tt: &Timetable,
    distributed: &SimReport,
    baseline: Option<&SimReport>,
) -> DelayReport {
    let mut trains: BTreeSet<TrainId> = distributed.decisions.iter().map(|d| d.train).collect();
    if let Some(b) = baseline {
        trains.extend(b.decisions.iter().map(|d| d.train));
    }
    let mut labels: BTreeMap<TrainId, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for d in &distributed.decisions {
        let e = labels.entry(d.train).or_default();
        e.0.push(format!("{:?}", d.kind));
        e.1.push(d.case.name().to_string());
    }
    let rows: Vec<ReportRow> = trains
        .into_iter()
        .map(|j| {
            let (decisions, cases) = labels.remove(&j).unwrap_or_default();
            ReportRow {
                train: j,
                number: tt.train(j).map_or_else(|| j.to_string(), |t| t.number.clone()),
                distributed_delay: distributed.per_train_delay.get(&j).copied().unwrap_or(0),
                baseline_delay: baseline.map(|b| b.per_train_delay.get(&j).copied().unwrap_or(0)),
                terminal_arrival: distributed.final_schedule.terminal(j).map_or(0, |e| e.x_at),
                decisions,
                cases,
            }
        })
        .collect();
    DelayReport {
        scenario: scenario.to_string(),
        distributed_total: rows.iter().map(|r| r.distributed_delay).sum(),
        baseline_total: baseline.map(|_| rows.iter().filter_map(|r| r.baseline_delay).sum()),
        rows,
    }
}

fn cells(r: &ReportRow) -> [String; 7] {
    let join = |v: &[String]| if v.is_empty() { "-".to_string() } else { v.join(",") };
    [
        r.train.to_string(),
        r.number.clone(),
        r.distributed_delay.to_string(),
        r.baseline_delay.map_or("-".into(), |d| d.to_string()),
        format_hhmm(r.terminal_arrival),
        join(&r.decisions),
        join(&r.cases),
    ]
}

const HEADER: [&str; 7] = ["train", "number", "distributed", "centralized", "arrival", "decisions", "cases"];

pub fn emit_report(report: &DelayReport, format: ReportFormat) -> String {
    let mut rows: Vec<[String; 7]> = report.rows.iter().map(cells).collect();
    rows.push([
        "total".into(),
        report.scenario.clone(),
        report.distributed_total.to_string(),
        report.baseline_total.map_or("-".into(), |d| d.to_string()),
        "-".into(),
        "-".into(),
        "-".into(),
    ]);
    let mut out = String::new();
    match format {
        ReportFormat::Delimited => {
            let _ = writeln!(out, "{}", HEADER.join("\t"));
            for r in &rows {
                let _ = writeln!(out, "{}", r.join("\t"));
            }
        }
        ReportFormat::Table => {
            let mut width = HEADER.map(str::len);
            for r in &rows {
                for (w, c) in width.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: &[&str]| {
                let padded: Vec<String> = cells.iter().zip(width).map(|(c, w)| format!("{c:<w$}")).collect();
                padded.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(&HEADER));
            let _ = writeln!(out, "{}", line(&width.map(|w| "-".repeat(w)).iter().map(String::as_str).collect::<Vec<_>>()));
            for r in &rows {
                let _ = writeln!(out, "{}", line(&r.iter().map(String::as_str).collect::<Vec<_>>()));
            }
        }
    }
    out
}
