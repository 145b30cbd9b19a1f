use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::typology::{Dimension, Typology};
use super::weights::{WeightSet, WeightTable};
use crate::case::{extract_features, DebtorCase, ExtractionContext, FeatureVector};
use crate::error::{Error, Result};

/// Location and scale of one feature over a pool. Missing values are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl FeatureStats {
    /// Sums run over sorted values so the result does not depend on pool order.
    pub fn fit(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut xs: Vec<f64> = values.into_iter().flatten().collect();
        if xs.is_empty() {
            return FeatureStats { mean: 0.0, sd: 0.0 };
        }
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let sd = (dev.iter().sum::<f64>() / n).sqrt();
        FeatureStats { mean, sd }
    }

    /// Missing and zero-variance features map to 0.
    pub fn standardize(&self, value: Option<f64>) -> f64 {
        match value {
            Some(x) if self.sd > 0.0 => (x - self.mean) / self.sd,
            _ => 0.0,
        }
    }
}

/// Standardize each feature over the pool (population SD). All vectors must
/// list the same features.
pub fn standardize(pool: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
    let Some(first) = pool.first() else {
        return Ok(Vec::new());
    };
    let ids: Vec<&str> = first.ids().collect();
    let mut stats = Vec::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        let column = pool
            .iter()
            .map(|v| match v.values.get(k) {
                Some((fid, x)) if fid == id => Ok(*x),
                _ => v.get(id).ok_or_else(|| Error::FeatureMismatch {
                    dimension: v.dimension.to_string(),
                    detail: format!("vector lacks feature `{id}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        stats.push(FeatureStats::fit(column));
    }
    Ok(pool
        .iter()
        .map(|v| FeatureVector {
            dimension: v.dimension,
            values: ids
                .iter()
                .zip(&stats)
                .map(|(id, s)| (id.to_string(), Some(s.standardize(v.get(id).flatten()))))
                .collect(),
        })
        .collect())
}

/// Weighted sum of a standardized vector. Features are matched by id.
pub fn score_dimension(standardized: &FeatureVector, weights: &WeightTable) -> Result<f64> {
    let mismatch = |detail: String| Error::FeatureMismatch {
        dimension: weights.dimension().to_string(),
        detail,
    };
    if standardized.values.len() != weights.len() {
        return Err(mismatch(format!(
            "{} features vs {} weights",
            standardized.values.len(),
            weights.len()
        )));
    }
    let mut total = 0.0;
    for (id, w) in weights.entries() {
        let x = standardized
            .get(id)
            .ok_or_else(|| mismatch(format!("no value for `{id}`")))?
            .unwrap_or(0.0);
        total += w * x;
    }
    Ok(total)
}

/// `[min, max]` of raw scores for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl ScoreRange {
    pub fn of(raw: &[f64]) -> Option<Self> {
        let min = raw.iter().copied().reduce(f64::min)?;
        let max = raw.iter().copied().reduce(f64::max)?;
        Some(ScoreRange { min, max })
    }

    /// Min-max normalization, clamped to [0, 1] for scores outside a frozen
    /// range. A degenerate range maps everything to 0.5.
    /// Ranges narrower than this, relative to the score magnitude, are
    /// treated as constant: they are summation noise, not spread.
    pub const DEGENERATE_RTOL: f64 = 1e-9;

    pub fn is_degenerate(&self) -> bool {
        let scale = 1f64.max(self.min.abs()).max(self.max.abs());
        self.max - self.min <= Self::DEGENERATE_RTOL * scale
    }

    pub fn normalize(&self, y: f64) -> f64 {
        if !self.is_degenerate() {
            ((y - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    }
}

pub fn normalize_scores(raw: &[f64]) -> Vec<f64> {
    match ScoreRange::of(raw) {
        Some(range) => raw.iter().map(|&y| range.normalize(y)).collect(),
        None => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScores {
    pub raw: BTreeMap<Dimension, f64>,
    pub normalized: BTreeMap<Dimension, f64>,
}

impl DimensionScores {
    pub fn normalized_array(&self) -> Option<[f64; 4]> {
        let mut out = [0.0; 4];
        for d in Dimension::ALL {
            out[d.index()] = *self.normalized.get(&d)?;
        }
        Some(out)
    }
}

pub fn classify(scores: &DimensionScores) -> Result<Typology> {
    scores
        .normalized_array()
        .map(Typology::classify)
        .ok_or_else(|| Error::Input("normalized scores must cover all four dimensions".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDebtor {
    pub case_id: String,
    pub debtor_id: String,
    pub scores: DimensionScores,
    pub typology: Typology,
}

/// Everything needed to score a debtor without its pool: resolved extraction
/// settings, per-feature standardization and per-dimension score ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub context: ExtractionContext,
    pub features: BTreeMap<Dimension, BTreeMap<String, FeatureStats>>,
    pub ranges: BTreeMap<Dimension, ScoreRange>,
    pub pool_size: usize,
}

impl ReferenceStats {
    pub fn fit(pool: &[DebtorCase], weights: &WeightSet, ctx: &ExtractionContext) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::Input("cannot fit reference statistics on an empty pool".into()));
        }
        let context = ctx.resolved_for(pool);
        let mut features = BTreeMap::new();
        let mut ranges = BTreeMap::new();
        for table in weights.tables() {
            let vectors = pool
                .iter()
                .map(|c| extract_features(c, table, &context))
                .collect::<Result<Vec<_>>>()?;
            let stats: BTreeMap<String, FeatureStats> = table
                .entries()
                .iter()
                .enumerate()
                .map(|(k, (id, _))| (id.clone(), FeatureStats::fit(vectors.iter().map(|v| v.values[k].1))))
                .collect();
            let raw = vectors
                .iter()
                .map(|v| raw_score(v, table, &stats))
                .collect::<Result<Vec<_>>>()?;
            ranges.insert(table.dimension(), ScoreRange::of(&raw).expect("pool is non-empty"));
            features.insert(table.dimension(), stats);
        }
        Ok(ReferenceStats {
            context,
            features,
            ranges,
            pool_size: pool.len(),
        })
    }

    pub fn score(&self, case: &DebtorCase, weights: &WeightSet) -> Result<ScoredDebtor> {
        let mut raw = BTreeMap::new();
        let mut normalized = BTreeMap::new();
        for table in weights.tables() {
            let d = table.dimension();
            let stats = self.features.get(&d).ok_or_else(|| Error::Config(format!("reference stats lack {d}")))?;
            let range = self.ranges.get(&d).ok_or_else(|| Error::Config(format!("reference stats lack {d} range")))?;
            let vector = extract_features(case, table, &self.context)?;
            let y = raw_score(&vector, table, stats)?;
            raw.insert(d, y);
            normalized.insert(d, range.normalize(y));
        }
        let scores = DimensionScores { raw, normalized };
        let typology = classify(&scores)?;
        Ok(ScoredDebtor {
            case_id: case.case_id.clone(),
            debtor_id: case.debtor_id.clone(),
            scores,
            typology,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("reference stats: {e}")))
    }
}

fn raw_score(vector: &FeatureVector, table: &WeightTable, stats: &BTreeMap<String, FeatureStats>) -> Result<f64> {
    let standardized = FeatureVector {
        dimension: vector.dimension,
        values: vector
            .values
            .iter()
            .map(|(id, x)| {
                let s = stats.get(id).ok_or_else(|| Error::FeatureMismatch {
                    dimension: table.dimension().to_string(),
                    detail: format!("no reference statistics for `{id}`"),
                })?;
                Ok((id.clone(), Some(s.standardize(*x))))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    score_dimension(&standardized, table)
}

/// Pool-relative scoring: fit on the pool, then score each member.
pub fn score_pool(
    pool: &[DebtorCase],
    weights: &WeightSet,
    ctx: &ExtractionContext,
) -> Result<(ReferenceStats, Vec<ScoredDebtor>)> {
    if pool.is_empty() {
        return Ok((
            ReferenceStats {
                context: ctx.clone(),
                features: BTreeMap::new(),
                ranges: BTreeMap::new(),
                pool_size: 0,
            },
            Vec::new(),
        ));
    }
    let stats = ReferenceStats::fit(pool, weights, ctx)?;
    let scored = pool
        .iter()
        .map(|c| stats.score(c, weights))
        .collect::<Result<Vec<_>>>()?;
    Ok((stats, scored))
}
