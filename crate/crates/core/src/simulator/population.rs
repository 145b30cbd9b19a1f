//! Synthetic debtor populations.
//!
//! ```toml
//! debtors = 100
//! [shares]
//! DICE = 0.20
//! WAOE = 0.13
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::Typology;

pub const SHARE_TOLERANCE: f64 = 1e-9;

/// The five most frequent typologies and their default shares.
pub const NAMED_SHARES: [(&str, f64); 5] = [
    ("DICE", 0.20),
    ("WAOE", 0.13),
    ("WACE", 0.11),
    ("WAOR", 0.10),
    ("DICR", 0.09),
];

pub const DEFAULT_DEBTORS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub debtors: u64,
    pub shares: BTreeMap<Typology, f64>,
    /// Overrides the run seed for the population draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PopulationSpec {
    pub fn new(debtors: u64, shares: BTreeMap<Typology, f64>) -> Result<Self> {
        let spec = PopulationSpec {
            debtors,
            shares,
            seed: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every debtor has the same typology.
    pub fn point_mass(typology: Typology, debtors: u64) -> Self {
        PopulationSpec {
            debtors,
            shares: [(typology, 1.0)].into(),
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shares.is_empty() {
            return Err(Error::InvalidPopulation("no typology shares".into()));
        }
        let mut total = 0.0;
        for (t, p) in &self.shares {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidPopulation(format!("share of {t} is {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(Error::InvalidPopulation(format!("shares sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn share(&self, typology: Typology) -> f64 {
        self.shares.get(&typology).copied().unwrap_or(0.0)
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let spec: PopulationSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        PopulationSpec::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = format!("debtors = {}\n", self.debtors);
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed = {seed}\n"));
        }
        out.push_str("\n[shares]\n");
        for (t, p) in &self.shares {
            out.push_str(&format!("{t} = {p:?}\n"));
        }
        out
    }
}

impl Default for PopulationSpec {
    /// Named typologies at their default shares; the remaining mass is spread
    /// evenly over the other eleven.
    fn default() -> Self {
        let named: BTreeMap<Typology, f64> = NAMED_SHARES
            .iter()
            .map(|(l, p)| (l.parse().expect("valid label"), *p))
            .collect();
        let rest = 1.0 - named.values().sum::<f64>();
        let others: Vec<Typology> = Typology::all()
            .into_iter()
            .filter(|t| !named.contains_key(t))
            .collect();
        let each = rest / others.len() as f64;
        let mut shares = named;
        for t in others {
            shares.insert(t, each);
        }
        PopulationSpec {
            debtors: DEFAULT_DEBTORS,
            shares,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Debtor {
    pub debtor_id: String,
    pub typology: Typology,
}

pub fn debtor_id(index: u64) -> String {
    format!("S{index:07}")
}

/// Independent categorical draw per debtor.
pub fn generate_population<R: Rng + ?Sized>(spec: &PopulationSpec, rng: &mut R) -> Result<Vec<Debtor>> {
    spec.validate()?;
    let typologies: Vec<Typology> = spec.shares.keys().copied().collect();
    let weights: Vec<f64> = spec.shares.values().copied().collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidPopulation(e.to_string()))?;
    Ok((0..spec.debtors)
        .map(|i| Debtor {
            debtor_id: debtor_id(i),
            typology: typologies[dist.sample(rng)],
        })
        .collect())
}
