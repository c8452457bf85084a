//! Command-line surface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::eval::{cmd_eval, render_table, EvalArgs};
use crate::commands::index::cmd_index;
use crate::commands::rerank::{cmd_rerank, RerankArgs};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "evrank", version, about = "Posterior re-ranking of multimodal retrieval candidates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an embedding file and write per-modality indexes.
    Index {
        /// Embedding file (chunk_id, doc_id, modality, page, bbox?, vector per line).
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Rank same-document evidence tuples for each query.
    Rerank(Box<RerankArgs>),
    /// Recall@k of run files against relevance judgments.
    Eval(EvalArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { embeddings, out } => {
            let counts = cmd_index(&embeddings, &out)?;
            for (m, n) in counts {
                eprintln!("{m}: {n} records");
            }
            Ok(())
        }
        Command::Rerank(args) => match &args.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| CliError::io(path, e))?;
                let mut w = BufWriter::new(file);
                cmd_rerank(&args, &mut w)
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                cmd_rerank(&args, &mut lock)
            }
        },
        Command::Eval(args) => {
            let report = cmd_eval(&args)?;
            let mut out = io::stdout().lock();
            out.write_all(render_table(&report).as_bytes())
                .map_err(|e| CliError::Contract(format!("writing output: {e}")))
        }
    }
}
