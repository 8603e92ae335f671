//! Result emission: the fixed-schema summary CSV and JSON convergence traces.
//!
//! CSV columns, in order:
//! `function,dim,variant,r,lambda,trials,sr,sp1,mean_success_evals,seed`.
//! An undefined SP1 (zero success rate) is written as the literal `-`, and
//! the same convention round-trips through [`SummaryRow::parse`].

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cma::{Radius, Variant};
use crate::config::RunSpec;
use crate::harness::{split_seed, ExperimentSummary};

pub const CSV_HEADER: &str = "function,dim,variant,r,lambda,trials,sr,sp1,mean_success_evals,seed";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One aggregated experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: String,
    pub dim: usize,
    pub variant: Variant,
    pub r: Option<Radius>,
    pub lambda: usize,
    pub trials: usize,
    pub sr: f64,
    pub sp1: Option<f64>,
    pub mean_success_evals: Option<f64>,
    pub seed: u64,
}

impl SummaryRow {
    pub fn new(spec: &RunSpec, lambda: usize, summary: &ExperimentSummary) -> SummaryRow {
        SummaryRow {
            function: spec.objective.function().name().to_string(),
            dim: spec.objective.dim(),
            variant: spec.variant,
            r: spec.radius,
            lambda,
            trials: summary.n_trials,
            sr: summary.success_rate,
            sp1: summary.sp1,
            mean_success_evals: summary.mean_success_evals,
            seed: spec.seed,
        }
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{:.2},{},{},{}",
            self.function,
            self.dim,
            self.variant,
            self.r.map_or_else(|| "-".to_string(), |r| r.to_string()),
            self.lambda,
            self.trials,
            self.sr,
            fmt_opt(self.sp1),
            fmt_opt(self.mean_success_evals),
            self.seed
        );
        s
    }

    pub fn parse(line: &str) -> Result<SummaryRow, String> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(format!("expected 10 fields, got {}", parts.len()));
        }
        let field = |i: usize, name: &str| -> Result<&str, String> {
            Ok(parts[i].trim()).and_then(|s| {
                if s.is_empty() {
                    Err(format!("empty field {name}"))
                } else {
                    Ok(s)
                }
            })
        };
        Ok(SummaryRow {
            function: field(0, "function")?.to_string(),
            dim: parse_num(field(1, "dim")?, "dim")?,
            variant: field(2, "variant")?
                .parse()
                .map_err(|e: crate::Error| e.to_string())?,
            r: match field(3, "r")? {
                "-" => None,
                s => Some(s.parse().map_err(|e: crate::Error| e.to_string())?),
            },
            lambda: parse_num(field(4, "lambda")?, "lambda")?,
            trials: parse_num(field(5, "trials")?, "trials")?,
            sr: parse_num(field(6, "sr")?, "sr")?,
            sp1: parse_opt(field(7, "sp1")?, "sp1")?,
            mean_success_evals: parse_opt(field(8, "mean_success_evals")?, "mean_success_evals")?,
            seed: parse_num(field(9, "seed")?, "seed")?,
        })
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {name} value {s:?}"))
}

fn parse_opt(s: &str, name: &str) -> Result<Option<f64>, String> {
    if s == "-" {
        Ok(None)
    } else {
        parse_num(s, name).map(Some)
    }
}

pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.emit());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), ReportError> {
    std::fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<SummaryRow>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(ReportError::Parse {
                line: 1,
                msg: format!("unexpected header {other:?}"),
            })
        }
        None => return Ok(Vec::new()),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| SummaryRow::parse(l).map_err(|msg| ReportError::Parse { line: i + 1, msg }))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SummaryRow>, ReportError> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Per-trial convergence series, one object per trial:
/// `{"trials": [{"seed": …, "success": …, "trace": [[evals, best_f], …]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub trials: Vec<TraceTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTrial {
    pub seed: u64,
    pub success: bool,
    pub trace: Vec<(u64, f64)>,
}

/// Collects the recorded traces of an experiment, re-deriving each trial's
/// seed from the base seed the experiment ran with.
pub fn trace_file(summary: &ExperimentSummary, base_seed: u64) -> TraceFile {
    TraceFile {
        trials: summary
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| TraceTrial {
                seed: split_seed(base_seed, i as u64),
                success: t.success,
                trace: t.trace.clone().unwrap_or_default(),
            })
            .collect(),
    }
}

pub fn write_trace_json(path: &Path, traces: &TraceFile) -> Result<(), ReportError> {
    std::fs::write(path, serde_json::to_string_pretty(traces)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sp1: Option<f64>) -> SummaryRow {
        SummaryRow {
            function: "ackley".into(),
            dim: 80,
            variant: Variant::MapCma,
            r: Some(Radius::Literal(1.0)),
            lambda: 17,
            trials: 100,
            sr: if sp1.is_some() { 0.97 } else { 0.0 },
            sp1,
            mean_success_evals: sp1.map(|v| v * 0.97),
            seed: 42,
        }
    }

    #[test]
    fn emit_uses_dash_for_undefined_sp1() {
        let line = row(None).emit();
        assert_eq!(line, "ackley,80,map-cma,1,17,100,0.00,-,-,42");
    }

    #[test]
    fn round_trip_including_dash() {
        for r in [row(None), row(Some(22802.0))] {
            let line = r.emit();
            let parsed = SummaryRow::parse(&line).unwrap();
            // Idempotent through the formatted precision.
            assert_eq!(parsed.emit(), line);
            assert_eq!(parsed.sp1.is_none(), r.sp1.is_none());
        }
    }

    #[test]
    fn csv_document_round_trip() {
        let rows = vec![row(Some(100.5)), row(None)];
        let text = to_csv(&rows);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(to_csv(&parsed), text);
    }

    #[test]
    fn bad_lines_are_located() {
        let text = format!("{CSV_HEADER}\nsphere,not-a-dim,cma-es,-,10,5,1.00,1.0,1.0,42\n");
        match parse_csv(&text) {
            Err(ReportError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn trace_schema() {
        let tf = TraceFile {
            trials: vec![TraceTrial {
                seed: 9,
                success: true,
                trace: vec![(10, 1.5), (20, 0.25)],
            }],
        };
        let json = serde_json::to_string(&tf).unwrap();
        assert_eq!(
            json,
            r#"{"trials":[{"seed":9,"success":true,"trace":[[10,1.5],[20,0.25]]}]}"#
        );
        let back: TraceFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tf);
    }
}
