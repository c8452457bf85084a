//! Line-delimited JSON record files and their schemas.
//!
//! Every file holds one JSON object per line. Blank lines are skipped. Errors
//! name the file and the 1-based line number.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use evrank::index::EmbeddingRecord;
use evrank::priors::{LayoutRecord, Relation};
use evrank::{BBox, Candidate, Modality};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Parses every non-blank line of `path`, keeping its line number.
pub fn read_jsonl<R: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, R)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CliError::record(path, i + 1, e.to_string()))?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn write_jsonl<W: Write, S: Serialize>(out: &mut W, record: &S) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Embedding file line: `chunk_id, doc_id, modality, page, bbox?, vector`.
pub type EmbeddingLine = EmbeddingRecord<f64>;

/// Reads and validates an embedding file, grouping records by modality.
///
/// Within a modality every vector must share the first vector's length, be
/// non-zero, and carry a fresh chunk id.
pub fn read_embeddings(path: &Path) -> Result<BTreeMap<Modality, Vec<EmbeddingLine>>> {
    let lines: Vec<(usize, EmbeddingLine)> = read_jsonl(path)?;
    if lines.is_empty() {
        return Err(CliError::EmptyInput { path: path.to_path_buf() });
    }
    let mut dims: HashMap<Modality, usize> = HashMap::new();
    let mut seen: HashSet<(Modality, String)> = HashSet::new();
    let mut grouped: BTreeMap<Modality, Vec<EmbeddingLine>> = BTreeMap::new();
    for (line, rec) in lines {
        let dim = *dims.entry(rec.modality).or_insert(rec.vector.len());
        if rec.vector.len() != dim {
            return Err(CliError::record(
                path,
                line,
                format!("{} vector has {} dimensions, expected {dim}", rec.modality, rec.vector.len()),
            ));
        }
        let norm: f64 = rec.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(CliError::record(path, line, format!("vector of {} has zero norm", rec.chunk_id)));
        }
        if !seen.insert((rec.modality, rec.chunk_id.clone())) {
            return Err(CliError::record(path, line, format!("duplicate chunk_id {}", rec.chunk_id)));
        }
        grouped.entry(rec.modality).or_default().push(rec);
    }
    Ok(grouped)
}

/// Query vector file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryVectorLine {
    pub query_id: String,
    pub modality: Modality,
    pub vector: Vec<f64>,
}

/// Pre-scored candidate file line, for pipelines that retrieve elsewhere.
///
/// `reranked_score`, when present on a text candidate, replaces `raw_score`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateLine {
    pub query_id: String,
    pub chunk_id: String,
    pub doc_id: String,
    pub modality: Modality,
    pub page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    pub raw_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reranked_score: Option<f64>,
}

impl CandidateLine {
    pub fn into_candidate(self) -> Candidate {
        let score = match (self.modality, self.reranked_score) {
            (Modality::Text, Some(r)) => r,
            _ => self.raw_score,
        };
        Candidate {
            chunk_id: self.chunk_id,
            doc_id: self.doc_id,
            modality: self.modality,
            page: self.page,
            bbox: self.bbox,
            raw_score: score,
            norm_score: 0.0,
        }
    }
}

/// Knowledge-graph edge line: `u, v, weight?` (weight defaults to 1).
pub type EdgeLine = Relation<f64>;

/// Layout line: `chunk_id, doc_id, page, bbox?, page_width, page_height`.
pub type LayoutLine = LayoutRecord<f64>;

/// Relevance judgment line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QrelLine {
    pub query_id: String,
    pub doc_id: String,
    pub page: u32,
}

/// One slot of a ranked tuple in a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOut {
    pub chunk_id: String,
    pub page: u32,
    pub raw_score: f64,
    pub norm_score: f64,
}

impl From<&Candidate> for SlotOut {
    fn from(c: &Candidate) -> Self {
        Self {
            chunk_id: c.chunk_id.clone(),
            page: c.page,
            raw_score: c.raw_score,
            norm_score: c.norm_score,
        }
    }
}

/// Ranked tuple line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLine {
    pub query_id: String,
    pub rank: usize,
    pub doc_id: String,
    pub text: Option<SlotOut>,
    pub image: Option<SlotOut>,
    pub screenshot: Option<SlotOut>,
    pub likelihood: f64,
    pub prior: f64,
    pub posterior: f64,
    pub aborted: bool,
    pub prior_signal_missing: bool,
    pub conflict_trace: Vec<f64>,
}

impl RankedLine {
    pub fn pages(&self) -> impl Iterator<Item = (String, u32)> + '_ {
        [&self.text, &self.image, &self.screenshot]
            .into_iter()
            .flatten()
            .map(|s| (self.doc_id.clone(), s.page))
    }
}
