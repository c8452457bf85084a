//! `evrank rerank`: retrieve per-modality candidates for each query and rank
//! evidence tuples by posterior.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, ValueEnum};
use evrank::index::{embed, HttpTransport, OfflineProvider, ProviderConfig, RemoteProvider};
use evrank::normalize::StatsSource;
use evrank::priors::{aggregate_relation_weights, ModePrior, PriorStores};
use evrank::ranker::{brute_force_rank, rank_baseline_raw, rank_top_k, Scorer};
use evrank::{
    Candidate, CandidatePool, EvidenceTuple, FusionConfig, FusionMode, GraphEdgeStore, LayoutStore, Modality, NormalizationStats,
    PriorMode, RankOptions,
};

use crate::commands::index::load_index;
use crate::config::load_config;
use crate::error::{CliError, Result};
use crate::manifest::{build_timestamp, InputDigest, ManifestLine, RetrievalSettings, RunManifest, RunMode};
use crate::records::{read_jsonl, write_jsonl, CandidateLine, EdgeLine, LayoutLine, QueryVectorLine, RankedLine, SlotOut};

/// Environment variable holding the remote embedding endpoint.
pub const ENDPOINT_ENV: &str = "EVRANK_EMBED_URL";
/// Environment variable holding the full `Authorization` header value.
pub const AUTH_ENV: &str = "EVRANK_EMBED_AUTH";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    Ds,
    Linear,
}

impl From<FusionArg> for FusionMode {
    fn from(f: FusionArg) -> Self {
        match f {
            FusionArg::Ds => FusionMode::Ds,
            FusionArg::Linear => FusionMode::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Graph,
    Layout,
    None,
}

impl From<PriorArg> for PriorMode {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Graph => PriorMode::Graph,
            PriorArg::Layout => PriorMode::Layout,
            PriorArg::None => PriorMode::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RerankArgs {
    /// Index artifact written by `evrank index`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query vector file (query_id, modality, vector per line).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Only rank this query id. With --query-text, names the query (default q0).
    #[arg(long)]
    pub query: Option<String>,
    /// Embed this text with the remote provider configured through EVRANK_EMBED_URL.
    #[arg(long)]
    pub query_text: Option<String>,
    /// Pre-scored candidate file; replaces --index retrieval.
    #[arg(long, conflicts_with_all = ["index", "queries", "query_text"])]
    pub candidates: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 1024)]
    pub pool_text: usize,
    #[arg(long, default_value_t = 512)]
    pub pool_image: usize,
    #[arg(long, default_value_t = 512)]
    pub pool_screenshot: usize,
    #[arg(long, value_enum, default_value = "ds")]
    pub fusion: FusionArg,
    #[arg(long, value_enum, default_value = "graph")]
    pub prior: PriorArg,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tau_page: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Knowledge-graph edge file (u, v, weight?), required by --prior graph.
    #[arg(long)]
    pub kg_edges: Option<PathBuf>,
    /// Layout file, required by --prior layout.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// JSON or TOML file with fusion parameters; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fixed per-modality normalization ranges (modality, s_min, s_max per line).
    #[arg(long)]
    pub norm_stats: Option<PathBuf>,
    /// Emit the raw-score baseline: all candidates merged by normalized score.
    #[arg(long)]
    pub baseline: bool,
    /// Score documents on a single thread.
    #[arg(long)]
    pub serial: bool,
    /// Rank with the exhaustive reference enumerator.
    #[arg(long, hide = true)]
    pub oracle: bool,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

impl Default for RerankArgs {
    fn default() -> Self {
        Self {
            index: None,
            queries: None,
            query: None,
            query_text: None,
            candidates: None,
            top_k: 20,
            pool_text: 1024,
            pool_image: 512,
            pool_screenshot: 512,
            fusion: FusionArg::Ds,
            prior: PriorArg::Graph,
            alpha: None,
            beta: None,
            kappa: None,
            tau: None,
            tau_page: None,
            epsilon: None,
            kg_edges: None,
            layout: None,
            config: None,
            norm_stats: None,
            baseline: false,
            serial: false,
            oracle: false,
            out: None,
        }
    }
}

impl RerankArgs {
    fn pool_size(&self, m: Modality) -> usize {
        match m {
            Modality::Text => self.pool_text,
            Modality::Image => self.pool_image,
            Modality::Screenshot => self.pool_screenshot,
        }
    }

    pub fn resolve_config(&self) -> Result<FusionConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => FusionConfig::default(),
        };
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.tau_page {
            cfg.tau_page = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Candidates of one query before normalization.
pub type QueryCandidates = Vec<(String, Vec<Candidate>)>;

fn keep_top(mut cands: Vec<Candidate>, limit: usize) -> Vec<Candidate> {
    cands.sort_by(|a, b| b.raw_score.total_cmp(&a.raw_score));
    cands.truncate(limit);
    cands
}

fn from_candidate_file(path: &Path, args: &RerankArgs) -> Result<QueryCandidates> {
    let lines: Vec<(usize, CandidateLine)> = read_jsonl(path)?;
    if lines.is_empty() {
        return Err(CliError::EmptyInput { path: path.to_path_buf() });
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_query: HashMap<String, BTreeMap<Modality, Vec<Candidate>>> = HashMap::new();
    for (line, rec) in lines {
        let score = rec.reranked_score.unwrap_or(rec.raw_score);
        if !rec.raw_score.is_finite() || !score.is_finite() {
            return Err(CliError::record(path, line, "scores must be finite numbers"));
        }
        if !by_query.contains_key(&rec.query_id) {
            order.push(rec.query_id.clone());
        }
        let modality = rec.modality;
        by_query
            .entry(rec.query_id.clone())
            .or_default()
            .entry(modality)
            .or_default()
            .push(rec.into_candidate());
    }
    Ok(order
        .into_iter()
        .map(|q| {
            let per_modality = by_query.remove(&q).unwrap_or_default();
            let cands = per_modality
                .into_iter()
                .flat_map(|(m, c)| keep_top(c, args.pool_size(m)))
                .collect();
            (q, cands)
        })
        .collect())
}

fn remote_provider(modality: Modality) -> Result<ProviderConfig<f64>> {
    let specific = format!("{ENDPOINT_ENV}_{}", modality.as_str().to_uppercase());
    let endpoint = std::env::var(&specific)
        .or_else(|_| std::env::var(ENDPOINT_ENV))
        .map_err(|_| CliError::Contract(format!("--query-text needs {specific} or {ENDPOINT_ENV} to be set")))?;
    Ok(ProviderConfig::Remote(RemoteProvider {
        endpoint,
        authorization: std::env::var(AUTH_ENV).ok(),
        transport: Box::new(HttpTransport::new(Duration::from_secs(30))?),
    }))
}

fn from_index(index_path: &Path, args: &RerankArgs) -> Result<QueryCandidates> {
    let set = load_index(index_path)?;
    // (query order, per-modality provider)
    let (query_ids, providers): (Vec<String>, BTreeMap<Modality, ProviderConfig<f64>>) =
        match (&args.queries, &args.query_text) {
            (Some(path), _) => {
                let lines: Vec<(usize, QueryVectorLine)> = read_jsonl(path)?;
                if lines.is_empty() {
                    return Err(CliError::EmptyInput { path: path.clone() });
                }
                let mut order = Vec::new();
                let mut maps: BTreeMap<Modality, OfflineProvider<f64>> = BTreeMap::new();
                for (_, l) in lines {
                    if !order.contains(&l.query_id) {
                        order.push(l.query_id.clone());
                    }
                    maps.entry(l.modality).or_default().insert(l.query_id, l.vector);
                }
                (order, maps.into_iter().map(|(m, p)| (m, ProviderConfig::Offline(p))).collect())
            }
            (None, Some(_)) => {
                let id = args.query.clone().unwrap_or_else(|| "q0".to_string());
                let providers = set
                    .indexes
                    .keys()
                    .map(|&m| Ok((m, remote_provider(m)?)))
                    .collect::<Result<_>>()?;
                (vec![id], providers)
            }
            (None, None) => {
                return Err(CliError::Contract("--index needs --queries or --query-text".into()));
            }
        };

    let mut out = Vec::new();
    for qid in query_ids {
        let mut cands = Vec::new();
        for (modality, index) in &set.indexes {
            let Some(provider) = providers.get(modality) else {
                continue;
            };
            let input = args.query_text.clone().unwrap_or_else(|| qid.clone());
            let vector = embed(&[input], provider, Some(index.dimensionality()))
                .map_err(|e| match e {
                    evrank::index::EmbedError::UnknownInput(_) => {
                        CliError::Contract(format!("query {qid} has no {modality} vector"))
                    }
                    other => other.into(),
                })?
                .remove(0);
            cands.extend(index.search_top_k(&vector, args.pool_size(*modality))?);
        }
        out.push((qid, cands));
    }
    Ok(out)
}

fn read_norm_stats(path: &Path) -> Result<StatsSource<f64>> {
    let lines: Vec<(usize, NormalizationStats)> = read_jsonl(path)?;
    let mut map = BTreeMap::new();
    for (line, s) in lines {
        let s = NormalizationStats::new(s.modality(), s.s_min(), s.s_max())
            .map_err(|e| CliError::record(path, line, e.to_string()))?;
        map.insert(s.modality(), s);
    }
    Ok(StatsSource::Fixed(map))
}

fn ranked_line(query_id: &str, rank: usize, t: &EvidenceTuple) -> RankedLine {
    RankedLine {
        query_id: query_id.to_string(),
        rank,
        doc_id: t.doc_id().unwrap_or_default().to_string(),
        text: t.text.as_ref().map(SlotOut::from),
        image: t.image.as_ref().map(SlotOut::from),
        screenshot: t.screenshot.as_ref().map(SlotOut::from),
        likelihood: t.likelihood,
        prior: t.prior,
        posterior: t.posterior,
        aborted: t.aborted,
        prior_signal_missing: t.prior_signal_missing,
        conflict_trace: t.conflict_trace.clone(),
    }
}

/// Runs the rerank pipeline and writes the run file to `out`.
pub fn cmd_rerank(args: &RerankArgs, out: &mut dyn Write) -> Result<()> {
    if args.top_k == 0 {
        return Err(CliError::Contract("--top-k must be at least 1".into()));
    }
    if [args.pool_text, args.pool_image, args.pool_screenshot].contains(&0) {
        return Err(CliError::Contract("pool sizes must be at least 1".into()));
    }
    let config = args.resolve_config()?;
    let fusion = FusionMode::from(args.fusion);
    let prior_mode = if args.baseline { PriorMode::None } else { PriorMode::from(args.prior) };

    let mut inputs = Vec::new();
    let graph: Option<GraphEdgeStore> = match (&args.kg_edges, prior_mode) {
        (Some(p), PriorMode::Graph) => {
            let edges: Vec<(usize, EdgeLine)> = read_jsonl(p)?;
            inputs.push(InputDigest::of("kg_edges", p)?);
            Some(aggregate_relation_weights(edges.into_iter().map(|(_, e)| e))?)
        }
        (None, PriorMode::Graph) => {
            return Err(CliError::MissingDependency(
                "--prior graph needs a knowledge-graph edge file: pass --kg-edges <path>".into(),
            ))
        }
        _ => None,
    };
    let layout: Option<LayoutStore> = match (&args.layout, prior_mode) {
        (Some(p), PriorMode::Layout) => {
            let recs: Vec<(usize, LayoutLine)> = read_jsonl(p)?;
            inputs.push(InputDigest::of("layout", p)?);
            Some(LayoutStore::from_records(recs.into_iter().map(|(_, r)| r))?)
        }
        (None, PriorMode::Layout) => {
            return Err(CliError::MissingDependency(
                "--prior layout needs a layout file: pass --layout <path>".into(),
            ))
        }
        _ => None,
    };
    let stores = PriorStores {
        graph: graph.as_ref(),
        layout: layout.as_ref(),
    };
    let prior = ModePrior::new(prior_mode, stores)?;

    let stats_source = match &args.norm_stats {
        Some(p) => {
            inputs.push(InputDigest::of("norm_stats", p)?);
            read_norm_stats(p)?
        }
        None => StatsSource::PerQuery,
    };
    if let Some(p) = &args.config {
        inputs.push(InputDigest::of("config", p)?);
    }

    let queries = match (&args.candidates, &args.index) {
        (Some(path), _) => {
            inputs.insert(0, InputDigest::of("candidates", path)?);
            from_candidate_file(path, args)?
        }
        (None, Some(index)) => {
            inputs.insert(0, InputDigest::of("index", index)?);
            if let Some(q) = &args.queries {
                inputs.insert(1, InputDigest::of("queries", q)?);
            }
            from_index(index, args)?
        }
        (None, None) => {
            return Err(CliError::Contract("give either --candidates or --index".into()));
        }
    };
    let queries: QueryCandidates = match (&args.query, &args.query_text) {
        (Some(only), None) => {
            let kept: QueryCandidates = queries.into_iter().filter(|(q, _)| q == only).collect();
            if kept.is_empty() {
                return Err(CliError::Contract(format!("query '{only}' not found in the inputs")));
            }
            kept
        }
        _ => queries,
    };

    let manifest = RunManifest {
        tool: "evrank".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "rerank".into(),
        mode: RunMode {
            fusion,
            prior: prior_mode,
            baseline: args.baseline,
        },
        retrieval: RetrievalSettings {
            top_k: args.top_k,
            pool_text: args.pool_text,
            pool_image: args.pool_image,
            pool_screenshot: args.pool_screenshot,
        },
        config: config.clone(),
        inputs,
        timestamp: build_timestamp(),
    };

    let mut buf = Vec::new();
    write_jsonl(&mut buf, &ManifestLine { manifest }).expect("in-memory write");
    let scorer = Scorer::new(fusion, &prior, &config);
    let options = RankOptions { parallel: !args.serial };
    for (qid, cands) in queries {
        if cands.is_empty() {
            return Err(CliError::Contract(format!("query '{qid}' retrieved no candidates")));
        }
        let pool = CandidatePool::from_raw(cands, &stats_source)
            .map_err(|e| CliError::Contract(format!("query '{qid}': {e}")))?;
        let ranked: Vec<EvidenceTuple> = if args.baseline {
            rank_baseline_raw(&pool, args.top_k)?
                .into_iter()
                .map(EvidenceTuple::single)
                .collect()
        } else if args.oracle {
            brute_force_rank(&pool, args.top_k, &scorer)?
        } else {
            rank_top_k(&pool, args.top_k, &scorer, options)?
        };
        for (i, t) in ranked.iter().enumerate() {
            write_jsonl(&mut buf, &ranked_line(&qid, i + 1, t)).expect("in-memory write");
        }
    }
    out.write_all(&buf).map_err(|e| CliError::Contract(format!("writing output: {e}")))?;
    out.flush().map_err(|e| CliError::Contract(format!("writing output: {e}")))
}
