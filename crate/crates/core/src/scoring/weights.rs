//! Per-dimension feature weights and their TOML config format.
//!
//! ```toml
//! [willingness]
//! asked_instalment_via_email = 2.0
//! multiple_solutions = -3.5
//!
//! [ability]
//! schufa_score = 2.0
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::typology::Dimension;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The shipped tables.
    Default,
    /// Loaded from a user-supplied file.
    User(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    dimension: Dimension,
    entries: Vec<(String, f64)>,
    provenance: Provenance,
}

impl WeightTable {
    pub fn new(dimension: Dimension, entries: Vec<(String, f64)>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config(format!("{dimension} weight table is empty")));
        }
        let mut seen = BTreeSet::new();
        for (id, w) in &entries {
            if !w.is_finite() {
                return Err(Error::Config(format!("{dimension}.{id}: weight {w} is not finite")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Config(format!("{dimension}: duplicate feature `{id}`")));
            }
        }
        Ok(WeightTable {
            dimension,
            entries,
            provenance,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn weight(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(f, _)| f == id).map(|(_, w)| *w)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weight tables for all four dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    tables: BTreeMap<Dimension, WeightTable>,
}

fn table(dimension: Dimension, rows: &[(&str, f64)]) -> WeightTable {
    WeightTable::new(
        dimension,
        rows.iter().map(|(id, w)| (id.to_string(), *w)).collect(),
        Provenance::Default,
    )
    .expect("default tables are valid")
}

// Row order follows the published tables. The ability table has 18 rows and
// the rationality table 16; the accompanying feature counts (19 and 17) are
// not backed by listed rows, so nothing is added.
const WILLINGNESS: &[(&str, f64)] = &[
    ("asked_instalment_via_email", 2.0),
    ("asked_pause_via_email", 2.0),
    ("promised_payment_date", 0.3),
    ("requested_instalment_plan", 0.8),
    ("payment_solution_taken", 0.7),
    ("signed_instalment_plan", 1.6),
    ("partial_payment_within_60d", 1.7),
    ("payment_page_visited", 0.6),
    ("debt_counseling", 1.0),
    ("name_in_email", 0.5),
    ("fraudulent_case", -0.5),
    ("debt_age_days", -1.5),
    ("any_reaction", 0.3),
    ("days_to_first_reaction", -1.7),
    ("debt_disputed", -1.2),
    ("name_valid", 0.6),
    ("email_valid", 0.8),
    ("address_valid", 0.6),
    ("court_process", -0.5),
    ("multiple_solutions", -3.5),
    ("direct_debit", 0.5),
];

const ABILITY: &[(&str, f64)] = &[
    ("pair_score", 1.3),
    ("pair_score_high", 1.5),
    ("claim_to_rent_ratio", -1.0),
    ("schufa_score", 2.0),
    ("schufa_score_high", 2.2),
    ("debt_paid", 1.5),
    ("payment_solution_taken", -1.3),
    ("deceased_or_imprisoned", -0.5),
    ("insolvency_initiated", -1.0),
    ("multiple_devices", 1.2),
    ("apple_device", 1.6),
    ("regional_rent_price", 0.5),
    ("regional_unemployment_ratio", -0.5),
    ("regional_disposable_income", 0.7),
    ("main_claim_amount", -2.5),
    ("debt_counseling", -0.5),
    ("recurrent_debtor", -1.0),
    ("court_process", -1.0),
];

const ORGANIZATION: &[(&str, f64)] = &[
    ("kept_payment_promise", 1.0),
    ("kept_instalment_schedule", 1.3),
    ("name_in_email", 0.5),
    ("instalment_late", 0.7),
    ("instalment_plan_cancelled", -0.5),
    ("multiple_solutions", -0.5),
    ("days_to_sign_instalment_plan", -0.5),
    ("debt_counseling", -0.5),
    ("returned_item_late", -1.0),
    ("paid_creditor_directly", -0.7),
    ("other_collection_case", -0.8),
    ("payment_attempt_expired", -0.5),
    ("email_valid", 1.0),
    ("email_attachments", 1.0),
    ("direct_debit", 0.5),
];

const RATIONALITY: &[(&str, f64)] = &[
    ("insulting_language", -1.0),
    ("repeated_punctuation", -0.8),
    ("formal_greeting", 1.3),
    ("email_length_extreme", -1.0),
    ("email_attachments", 1.5),
    ("emoji_used", -0.5),
    ("multiple_replies_to_one_email", -1.5),
    ("uppercase_ratio", -1.5),
    ("paid_after_fee_increase", -2.3),
    ("claim_to_fee_ratio", 8.0),
    ("pause_after_reduction", 2.7),
    ("instalment_after_reduction", 2.6),
    ("paid_after_reduction", 2.5),
    ("instalment_without_extra_fees", 2.3),
    ("pause_without_extra_fees", 2.0),
    ("paid_in_court_process", -1.0),
];

impl WeightSet {
    pub fn default_tables() -> Self {
        let tables = [
            table(Dimension::Willingness, WILLINGNESS),
            table(Dimension::Ability, ABILITY),
            table(Dimension::Organization, ORGANIZATION),
            table(Dimension::Rationality, RATIONALITY),
        ];
        WeightSet {
            tables: tables.into_iter().map(|t| (t.dimension, t)).collect(),
        }
    }

    pub fn from_tables(tables: impl IntoIterator<Item = WeightTable>) -> Result<Self> {
        let tables: BTreeMap<_, _> = tables.into_iter().map(|t| (t.dimension, t)).collect();
        for d in Dimension::ALL {
            if !tables.contains_key(&d) {
                return Err(Error::Config(format!("missing weight table for {d}")));
            }
        }
        Ok(WeightSet { tables })
    }

    pub fn get(&self, dimension: Dimension) -> &WeightTable {
        &self.tables[&dimension]
    }

    pub fn tables(&self) -> impl Iterator<Item = &WeightTable> {
        self.tables.values()
    }

    pub fn as_map(&self) -> &BTreeMap<Dimension, WeightTable> {
        &self.tables
    }

    /// Parse the sectioned TOML format; `origin` becomes the provenance tag.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let raw: BTreeMap<String, BTreeMap<String, f64>> =
            toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        let mut tables = Vec::new();
        for (section, rows) in raw {
            let dimension: Dimension = section.parse()?;
            tables.push(WeightTable::new(
                dimension,
                rows.into_iter().collect(),
                Provenance::User(origin.to_string()),
            )?);
        }
        WeightSet::from_tables(tables)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        WeightSet::from_toml_str(&text, &path.display().to_string())
    }

    /// Render in the config format, rows in table order.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for t in self.tables.values() {
            out.push_str(&format!("[{}]\n", t.dimension));
            for (id, w) in &t.entries {
                out.push_str(&format!("{id} = {w:?}\n"));
            }
            out.push('\n');
        }
        out
    }
}

impl Default for WeightSet {
    fn default() -> Self {
        WeightSet::default_tables()
    }
}
