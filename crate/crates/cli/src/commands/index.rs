//! `evrank index`: validate an embedding file and persist per-modality indexes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use evrank::index::build_index;
use evrank::{EmbeddingRecord, Modality, ModalityIndex};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::InputDigest;
use crate::records::read_embeddings;

pub const INDEX_FORMAT: &str = "evrank-index/1";

#[derive(Serialize)]
struct IndexFileOut<'a> {
    format: &'static str,
    source: InputDigest,
    indexes: Vec<&'a ModalityIndex>,
}

#[derive(Deserialize)]
struct StoredIndex {
    modality: Modality,
    dimensionality: usize,
    records: Vec<EmbeddingRecord>,
}

#[derive(Deserialize)]
struct IndexFileIn {
    format: String,
    source: InputDigest,
    indexes: Vec<StoredIndex>,
}

/// Loaded index artifact.
#[derive(Debug)]
pub struct IndexSet {
    pub source: InputDigest,
    pub indexes: BTreeMap<Modality, ModalityIndex>,
}

pub fn cmd_index(embeddings: &Path, out: &Path) -> Result<BTreeMap<Modality, usize>> {
    let grouped = read_embeddings(embeddings)?;
    let mut indexes = Vec::new();
    for (_, records) in grouped {
        indexes.push(build_index(records)?);
    }
    let counts = indexes.iter().map(|i| (i.modality(), i.len())).collect();
    let file = IndexFileOut {
        format: INDEX_FORMAT,
        source: InputDigest::of("embeddings", embeddings)?,
        indexes: indexes.iter().collect(),
    };
    let handle = File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut w = BufWriter::new(handle);
    serde_json::to_writer(&mut w, &file)
        .map_err(|e| CliError::io(out, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(out, e))?;
    Ok(counts)
}

pub fn load_index(path: &Path) -> Result<IndexSet> {
    let handle = File::open(path).map_err(|e| CliError::io(path, e))?;
    let raw: IndexFileIn = serde_json::from_reader(std::io::BufReader::new(handle))
        .map_err(|e| CliError::Contract(format!("{}: not an index file: {e}", path.display())))?;
    if raw.format != INDEX_FORMAT {
        return Err(CliError::Contract(format!(
            "{}: unsupported index format '{}'",
            path.display(),
            raw.format
        )));
    }
    let mut indexes = BTreeMap::new();
    for stored in raw.indexes {
        let idx = build_index(stored.records)?;
        if idx.modality() != stored.modality || idx.dimensionality() != stored.dimensionality {
            return Err(CliError::Contract(format!(
                "{}: {} index header disagrees with its records",
                path.display(),
                stored.modality
            )));
        }
        indexes.insert(idx.modality(), idx);
    }
    Ok(IndexSet {
        source: raw.source,
        indexes,
    })
}
