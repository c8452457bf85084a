//! Posterior re-ranking of multimodal retrieval candidates.
//!
//! Candidates retrieved independently for text, image and screenshot are
//! grouped into same-document evidence tuples. Each tuple is scored by a
//! likelihood, which fuses its per-modality similarity scores with
//! Dempster-Shafer combination, times a structural prior drawn from either
//! knowledge-graph connectivity or page layout. Tuples are ranked by that
//! posterior.
//!
//! All scoring math is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, the precision the CLI and file
//! formats use.

pub mod config;
pub mod eval;
pub mod fusion;
pub mod index;
pub mod mass;
pub mod normalize;
pub mod priors;
pub mod ranker;
pub mod scalar;
pub mod types;

pub use fusion::{FusionError, FusionMode};
pub use priors::{PriorError, PriorMode};
pub use ranker::{RankError, RankOptions};
pub use scalar::Scalar;
pub use types::{Modality, Slots};

pub type FusionConfig = config::FusionConfig<f64>;
pub type MassFunction = mass::MassFunction<f64>;
pub type Candidate = types::Candidate<f64>;
pub type BBox = types::BBox<f64>;
pub type NormalizationStats = normalize::NormalizationStats<f64>;
pub type LikelihoodResult = fusion::LikelihoodResult<f64>;
pub type GraphEdgeStore = priors::GraphEdgeStore<f64>;
pub type LayoutRecord = priors::LayoutRecord<f64>;
pub type LayoutStore = priors::LayoutStore<f64>;
pub type Relation = priors::Relation<f64>;
pub type EmbeddingRecord = index::EmbeddingRecord<f64>;
pub type ModalityIndex = index::ModalityIndex<f64>;
pub type CandidatePool = ranker::CandidatePool<f64>;
pub type EvidenceTuple = ranker::EvidenceTuple<f64>;
