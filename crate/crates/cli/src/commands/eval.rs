//! `evrank eval`: recall@k of one or more run files against page judgments.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use evrank::eval::{compare_runs, evaluate_run, PageRun, Qrels, RecallDelta, RecallMode, RecallReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::records::{read_jsonl, QrelLine, RankedLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecallArg {
    Hit,
    Set,
}

impl From<RecallArg> for RecallMode {
    fn from(r: RecallArg) -> Self {
        match r {
            RecallArg::Hit => RecallMode::Hit,
            RecallArg::Set => RecallMode::Set,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Relevance judgments (query_id, doc_id, page per line).
    #[arg(long)]
    pub qrels: PathBuf,
    /// Run file from `evrank rerank`; repeat to compare runs against the first.
    #[arg(long, required = true)]
    pub run: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,20")]
    pub ks: Vec<usize>,
    #[arg(long, value_enum, default_value = "hit")]
    pub recall: RecallArg,
    /// Write the full report as JSON.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: PathBuf,
    pub manifest: Option<RunManifest>,
    pub report: RecallReport,
    /// Differences against the first run; empty for the first run itself.
    pub delta: Vec<RecallDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub qrels: PathBuf,
    pub runs: Vec<RunReport>,
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    let lines: Vec<(usize, QrelLine)> = read_jsonl(path)?;
    if lines.is_empty() {
        return Err(CliError::EmptyInput { path: path.to_path_buf() });
    }
    Ok(Qrels::from_judgments(lines.into_iter().map(|(_, q)| (q.query_id, q.doc_id, q.page))))
}

/// Reads a run file into per-query page sets ordered by rank.
pub fn load_run(path: &Path) -> Result<(Option<RunManifest>, PageRun)> {
    let lines: Vec<(usize, Value)> = read_jsonl(path)?;
    let mut manifest = None;
    let mut ranked: Vec<(usize, RankedLine)> = Vec::with_capacity(lines.len());
    for (line, v) in lines {
        if let Some(m) = v.get("manifest") {
            if manifest.is_some() || !ranked.is_empty() {
                return Err(CliError::record(path, line, "manifest must be the first line"));
            }
            let m = RunManifest::deserialize(m).map_err(|e| CliError::record(path, line, e.to_string()))?;
            manifest = Some(m);
            continue;
        }
        let r = RankedLine::deserialize(v).map_err(|e| CliError::record(path, line, e.to_string()))?;
        ranked.push((line, r));
    }
    let mut run = PageRun::new();
    let mut last_rank: std::collections::HashMap<String, usize> = Default::default();
    for (line, r) in ranked {
        let prev = last_rank.insert(r.query_id.clone(), r.rank).unwrap_or(0);
        if r.rank != prev + 1 {
            return Err(CliError::record(
                path,
                line,
                format!("rank {} of query '{}' does not follow rank {prev}", r.rank, r.query_id),
            ));
        }
        let pages: BTreeSet<_> = r.pages().collect();
        run.entry(r.query_id).or_default().push(pages);
    }
    Ok((manifest, run))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let qrels = load_qrels(&args.qrels)?;
    let mode = RecallMode::from(args.recall);
    let mut runs: Vec<RunReport> = Vec::with_capacity(args.run.len());
    for path in &args.run {
        let (manifest, run) = load_run(path)?;
        let report = evaluate_run(&run, &qrels, &args.ks, mode).map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?;
        let delta = match runs.first() {
            Some(first) => compare_runs(&first.report, &report)?,
            None => Vec::new(),
        };
        runs.push(RunReport {
            run: path.clone(),
            manifest,
            report,
            delta,
        });
    }
    let report = EvalReport {
        qrels: args.qrels.clone(),
        runs,
    };
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(out, json + "\n").map_err(|e| CliError::io(out, e))?;
    }
    Ok(report)
}

/// Plain-text recall table with deltas against the first run.
pub fn render_table(report: &EvalReport) -> String {
    let Some(first) = report.runs.first() else {
        return String::new();
    };
    let mut s = String::new();
    let _ = write!(s, "{:<40}", "run");
    for k in &first.report.ks {
        let _ = write!(s, " {:>9}", format!("R@{k}"));
    }
    s.push('\n');
    for r in &report.runs {
        let _ = write!(s, "{:<40}", r.run.display().to_string());
        for v in &r.report.recall {
            let _ = write!(s, " {v:>9.4}");
        }
        s.push('\n');
        if !r.delta.is_empty() {
            let _ = write!(s, "{:<40}", "  delta");
            for d in &r.delta {
                let _ = write!(s, " {:>+9.4}", d.delta);
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(q: &str, rank: usize, doc: &str, page: u32) -> String {
        format!(
            r#"{{"query_id":"{q}","rank":{rank},"doc_id":"{doc}","text":{{"chunk_id":"c","page":{page},"raw_score":0.5,"norm_score":0.5}},"image":null,"screenshot":null,"likelihood":0.5,"prior":1.0,"posterior":0.5,"aborted":false,"prior_signal_missing":false,"conflict_trace":[]}}"#
        )
    }

    #[test]
    fn run_pages_in_rank_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        std::fs::write(&path, [line("q", 1, "A", 2), line("q", 2, "B", 5)].join("\n")).unwrap();
        let (manifest, run) = load_run(&path).unwrap();
        assert!(manifest.is_none());
        assert_eq!(run["q"], vec![BTreeSet::from([("A".into(), 2)]), BTreeSet::from([("B".into(), 5)])]);
    }

    #[test]
    fn rank_gaps_are_reported_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        std::fs::write(&path, [line("q", 1, "A", 2), line("q", 3, "B", 5)].join("\n")).unwrap();
        let err = load_run(&path).unwrap_err().to_string();
        assert!(err.contains("run.jsonl:2:"), "{err}");
    }
}
