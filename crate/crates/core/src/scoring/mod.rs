//! Dimension scores and typology classification.
//!
//! Features are standardized over a pool, combined with a per-dimension
//! weighted sum, min-max normalized to [0, 1] and cut at 0.5.

mod pipeline;
mod typology;
mod weights;

pub use pipeline::{
    classify, normalize_scores, score_dimension, score_pool, standardize, DimensionScores, FeatureStats,
    ReferenceStats, ScoreRange, ScoredDebtor,
};
pub use typology::{Dimension, Typology, CUTOFF};
pub use weights::{Provenance, WeightSet, WeightTable};
