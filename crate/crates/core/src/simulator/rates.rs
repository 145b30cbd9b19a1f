//! Reaction and payment probabilities for the simulator.
//!
//! Reaction probabilities are per message, keyed by (typology, tonality,
//! slot). Letters use an explicit cell when given, otherwise the mean of the
//! tonality's four email cells. Payment is drawn only after a reaction, with a
//! per-typology probability `q`.
//!
//! Config format (TOML):
//!
//! ```toml
//! [reaction.WACE]
//! "reciprocity@20:00" = 0.303
//! "informative" = 0.26      # letter cell, optional
//!
//! [payment]
//! WACE = 0.895
//!
//! [quoted]
//! WACE = ["reciprocity@20:00"]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Action, Channel, TimeSlot, Tonality};
use crate::scoring::Typology;

/// Where a cell value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSource {
    /// Stated as a number in the source study.
    Quoted,
    /// Filled in by the default-table construction.
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub p: f64,
    pub source: CellSource,
}

/// Case-level rates from the overview tables, kept for ordering checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseTargets {
    pub reaction: f64,
    pub payment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    reaction: BTreeMap<Typology, BTreeMap<Action, RateCell>>,
    payment: BTreeMap<Typology, f64>,
    #[serde(default)]
    targets: BTreeMap<Typology, CaseTargets>,
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("{what}: probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl RateTable {
    pub fn new(
        reaction: BTreeMap<Typology, BTreeMap<Action, RateCell>>,
        payment: BTreeMap<Typology, f64>,
        targets: BTreeMap<Typology, CaseTargets>,
    ) -> Result<Self> {
        for (t, cells) in &reaction {
            for (a, c) in cells {
                check_probability(&format!("reaction {t} {a}"), c.p)?;
            }
        }
        for (t, q) in &payment {
            check_probability(&format!("payment {t}"), *q)?;
        }
        Ok(RateTable {
            reaction,
            payment,
            targets,
        })
    }

    pub fn cell(&self, typology: Typology, action: Action) -> Result<RateCell> {
        let row = self.reaction.get(&typology);
        if let Some(c) = row.and_then(|r| r.get(&action)) {
            return Ok(*c);
        }
        if action.channel() == Channel::Letter {
            if let Some(row) = row {
                let cells: Option<Vec<f64>> = TimeSlot::ALL
                    .iter()
                    .map(|&s| row.get(&Action::email(action.tonality, s)).map(|c| c.p))
                    .collect();
                if let Some(cells) = cells {
                    return Ok(RateCell {
                        p: cells.iter().sum::<f64>() / cells.len() as f64,
                        source: CellSource::Interpolated,
                    });
                }
            }
        }
        Err(Error::MissingRateCell(format!("reaction {typology} {action}")))
    }

    pub fn reaction(&self, typology: Typology, action: Action) -> Result<f64> {
        Ok(self.cell(typology, action)?.p)
    }

    /// Payment probability given a reaction.
    pub fn payment(&self, typology: Typology) -> Result<f64> {
        self.payment
            .get(&typology)
            .copied()
            .ok_or_else(|| Error::MissingRateCell(format!("payment {typology}")))
    }

    pub fn targets(&self) -> &BTreeMap<Typology, CaseTargets> {
        &self.targets
    }

    /// Reaction rate of a tonality when the slot is uniform over the day.
    pub fn tonality_mean(&self, typology: Typology, tonality: Tonality) -> Result<f64> {
        let mut sum = 0.0;
        for s in TimeSlot::ALL {
            sum += self.reaction(typology, Action::email(tonality, s))?;
        }
        Ok(sum / TimeSlot::ALL.len() as f64)
    }

    pub fn quoted_cells(&self) -> Vec<(Typology, Action, f64)> {
        let mut out = Vec::new();
        for (t, row) in &self.reaction {
            for (a, c) in row {
                if c.source == CellSource::Quoted {
                    out.push((*t, *a, c.p));
                }
            }
        }
        out
    }

    /// Every email cell and payment probability for `typologies` is present.
    pub fn check_covers(&self, typologies: impl IntoIterator<Item = Typology>) -> Result<()> {
        for t in typologies {
            for a in Action::email_arms().chain(Action::letter_arms()) {
                self.cell(t, a)?;
            }
            self.payment(t)?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // config files

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            reaction: BTreeMap<String, BTreeMap<String, f64>>,
            payment: BTreeMap<String, f64>,
            #[serde(default)]
            quoted: BTreeMap<String, Vec<String>>,
            #[serde(default)]
            targets: BTreeMap<String, CaseTargets>,
        }
        let cfg = |e: Error| Error::Config(format!("{origin}: {e}"));
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        let mut quoted = BTreeSet::new();
        for (t, keys) in &raw.quoted {
            let t: Typology = t.parse().map_err(cfg)?;
            for k in keys {
                let a: Action = k.parse().map_err(cfg)?;
                quoted.insert((t, a));
            }
        }
        let mut reaction = BTreeMap::new();
        for (t, cells) in raw.reaction {
            let t: Typology = t.parse().map_err(cfg)?;
            let mut row = BTreeMap::new();
            for (k, p) in cells {
                let a: Action = k.parse().map_err(cfg)?;
                let source = if quoted.remove(&(t, a)) {
                    CellSource::Quoted
                } else {
                    CellSource::Interpolated
                };
                row.insert(a, RateCell { p, source });
            }
            reaction.insert(t, row);
        }
        if let Some((t, a)) = quoted.into_iter().next() {
            return Err(Error::Config(format!("{origin}: quoted cell {t} {a} has no value")));
        }
        let mut payment = BTreeMap::new();
        for (t, q) in raw.payment {
            payment.insert(t.parse().map_err(cfg)?, q);
        }
        let mut targets = BTreeMap::new();
        for (t, c) in raw.targets {
            targets.insert(t.parse().map_err(cfg)?, c);
        }
        RateTable::new(reaction, payment, targets).map_err(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        RateTable::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for (t, row) in &self.reaction {
            out.push_str(&format!("[reaction.{t}]\n"));
            for (a, c) in row {
                out.push_str(&format!("\"{a}\" = {:?}\n", c.p));
            }
            out.push('\n');
        }
        out.push_str("[payment]\n");
        for (t, q) in &self.payment {
            out.push_str(&format!("{t} = {q:?}\n"));
        }
        out.push_str("\n[quoted]\n");
        for (t, row) in &self.reaction {
            let keys: Vec<String> = row
                .iter()
                .filter(|(_, c)| c.source == CellSource::Quoted)
                .map(|(a, _)| format!("\"{a}\""))
                .collect();
            if !keys.is_empty() {
                out.push_str(&format!("{t} = [{}]\n", keys.join(", ")));
            }
        }
        if !self.targets.is_empty() {
            out.push('\n');
            for (t, c) in &self.targets {
                out.push_str(&format!(
                    "[targets.{t}]\nreaction = {:?}\npayment = {:?}\n",
                    c.reaction, c.payment
                ));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// default table

/// Case-level reaction and payment rates in percent, in label order.
const CASE_RATES: [(&str, f64, f64); 16] = [
    ("DACE", 45.1, 21.6),
    ("DACR", 58.4, 25.9),
    ("DAOE", 61.5, 22.6),
    ("DAOR", 80.2, 39.2),
    ("DICE", 19.8, 4.8),
    ("DICR", 27.6, 5.3),
    ("DIOE", 32.4, 4.9),
    ("DIOR", 51.7, 8.4),
    ("WACE", 83.0, 74.3),
    ("WACR", 93.7, 87.5),
    ("WAOE", 90.1, 79.6),
    ("WAOR", 97.8, 94.8),
    ("WICE", 78.8, 58.4),
    ("WICR", 80.1, 59.2),
    ("WIOE", 84.5, 62.7),
    ("WIOR", 91.9, 75.5),
];

/// Messages per case assumed when turning a case-level rate into a
/// per-message level for the interpolated rows.
pub const ASSUMED_MESSAGES_PER_CASE: u32 = 5;

/// Per-message rows for the named typologies. Rows are tonalities
/// in `Tonality::ALL` order, columns 08:00, 12:00, 16:00, 20:00.
const NAMED_ROWS: [(&str, [[f64; 4]; 5]); 5] = [
    (
        "DICE",
        [
            [0.046, 0.057, 0.048, 0.044],
            [0.036, 0.04, 0.037, 0.034],
            [0.022, 0.025, 0.023, 0.021],
            [0.032, 0.036, 0.033, 0.03],
            [0.034, 0.038, 0.035, 0.032],
        ],
    ),
    (
        "DICR",
        [
            [0.044, 0.087, 0.076, 0.07],
            [0.052, 0.058, 0.055, 0.05],
            [0.026, 0.032, 0.03, 0.028],
            [0.048, 0.053, 0.05, 0.046],
            [0.05, 0.056, 0.053, 0.049],
        ],
    ),
    (
        "WAOE",
        [
            [0.43, 0.475, 0.44, 0.425],
            [0.42, 0.435, 0.425, 0.41],
            [0.445, 0.445, 0.44, 0.44],
            [0.415, 0.43, 0.42, 0.405],
            [0.405, 0.425, 0.415, 0.405],
        ],
    ),
    (
        "WACE",
        [
            [0.225, 0.23, 0.225, 0.22],
            [0.26, 0.27, 0.265, 0.265],
            [0.24, 0.245, 0.24, 0.235],
            [0.245, 0.25, 0.245, 0.24],
            [0.25, 0.255, 0.25, 0.303],
        ],
    ),
    (
        "WAOR",
        [
            [0.47, 0.49, 0.475, 0.471],
            [0.474, 0.544, 0.46, 0.446],
            [0.44, 0.455, 0.445, 0.44],
            [0.45, 0.465, 0.455, 0.45],
            [0.46, 0.46, 0.456, 0.6],
        ],
    ),
];

/// Cells stated as numbers in the study text.
const QUOTED: [(&str, Tonality, TimeSlot); 7] = [
    ("DICE", Tonality::Cooperative, TimeSlot::T1200),
    ("WAOE", Tonality::Cooperative, TimeSlot::T1200),
    ("WACE", Tonality::Reciprocity, TimeSlot::T2000),
    ("WAOR", Tonality::Informative, TimeSlot::T1200),
    ("WAOR", Tonality::Informative, TimeSlot::T0800),
    ("DICR", Tonality::Cooperative, TimeSlot::T1200),
    ("DICR", Tonality::Cooperative, TimeSlot::T0800),
];

/// Tonality profile for the defiant-insolvent rows: cooperative helps, hard hurts.
const PROFILE_DEFIANT_INSOLVENT: [f64; 5] = [1.15, 1.0, 0.8, 0.95, 1.0];
const PROFILE_NEUTRAL: [f64; 5] = [1.0, 1.02, 0.98, 0.99, 1.01];
const SLOT_PROFILE: [f64; 4] = [0.97, 1.04, 1.0, 0.99];

/// Per-message rate giving case-level rate `r` over `k` independent messages.
pub fn per_message_rate(case_rate: f64, k: u32) -> f64 {
    1.0 - (1.0 - case_rate).powf(1.0 / f64::from(k))
}

fn interpolated_row(t: Typology, case_rate: f64) -> BTreeMap<Action, RateCell> {
    let base = per_message_rate(case_rate, ASSUMED_MESSAGES_PER_CASE);
    let tonality = if !t.is_high(crate::scoring::Dimension::Willingness)
        && !t.is_high(crate::scoring::Dimension::Ability)
    {
        PROFILE_DEFIANT_INSOLVENT
    } else {
        PROFILE_NEUTRAL
    };
    let mut raw = Vec::new();
    for (ti, tf) in tonality.iter().enumerate() {
        for (si, sf) in SLOT_PROFILE.iter().enumerate() {
            raw.push((Action::email(Tonality::ALL[ti], TimeSlot::ALL[si]), tf * sf));
        }
    }
    let mean = raw.iter().map(|(_, f)| f).sum::<f64>() / raw.len() as f64;
    raw.into_iter()
        .map(|(a, f)| {
            let p = (base * f / mean).clamp(0.0, 1.0);
            (a, RateCell { p, source: CellSource::Interpolated })
        })
        .collect()
}

impl Default for RateTable {
    fn default() -> Self {
        let mut reaction = BTreeMap::new();
        let mut payment = BTreeMap::new();
        let mut targets = BTreeMap::new();
        for (label, r, pay) in CASE_RATES {
            let t: Typology = label.parse().expect("valid label");
            targets.insert(t, CaseTargets { reaction: r / 100.0, payment: pay / 100.0 });
            payment.insert(t, pay / r);
            let row = match NAMED_ROWS.iter().find(|(l, _)| *l == label) {
                Some((_, grid)) => {
                    let mut row = BTreeMap::new();
                    for (ti, cells) in grid.iter().enumerate() {
                        for (si, p) in cells.iter().enumerate() {
                            let tonality = Tonality::ALL[ti];
                            let slot = TimeSlot::ALL[si];
                            let source = if QUOTED.contains(&(label, tonality, slot)) {
                                CellSource::Quoted
                            } else {
                                CellSource::Interpolated
                            };
                            row.insert(Action::email(tonality, slot), RateCell { p: *p, source });
                        }
                    }
                    row
                }
                None => interpolated_row(t, r / 100.0),
            };
            reaction.insert(t, row);
        }
        RateTable::new(reaction, payment, targets).expect("default rates are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(s: &str) -> Typology {
        s.parse().unwrap()
    }

    #[test]
    fn default_contains_quoted_cells_verbatim() {
        let r = RateTable::default();
        let e = |ton, slot| Action::email(ton, slot);
        assert_eq!(r.reaction(t("WACE"), e(Tonality::Reciprocity, TimeSlot::T2000)).unwrap(), 0.303);
        assert_eq!(r.reaction(t("WAOR"), e(Tonality::Informative, TimeSlot::T1200)).unwrap(), 0.544);
        assert_eq!(r.reaction(t("WAOR"), e(Tonality::Informative, TimeSlot::T0800)).unwrap(), 0.474);
        assert_eq!(r.reaction(t("DICR"), e(Tonality::Cooperative, TimeSlot::T1200)).unwrap(), 0.087);
        assert_eq!(r.reaction(t("DICR"), e(Tonality::Cooperative, TimeSlot::T0800)).unwrap(), 0.044);
        assert_eq!(r.reaction(t("DICE"), e(Tonality::Cooperative, TimeSlot::T1200)).unwrap(), 0.057);
        assert_eq!(r.reaction(t("WAOE"), e(Tonality::Cooperative, TimeSlot::T1200)).unwrap(), 0.475);
        assert_eq!(r.quoted_cells().len(), QUOTED.len());
    }

    #[test]
    fn default_tonality_means_match_quotes() {
        let r = RateTable::default();
        assert_abs_diff_eq!(r.tonality_mean(t("WAOR"), Tonality::Reciprocity).unwrap(), 0.494, epsilon = 1e-12);
        assert_abs_diff_eq!(r.tonality_mean(t("WAOR"), Tonality::SocialComparison).unwrap(), 0.455, epsilon = 1e-12);
    }

    #[test]
    fn default_orderings_follow_the_text() {
        let r = RateTable::default();
        let best = |ty: &str| {
            Tonality::ALL
                .into_iter()
                .max_by(|a, b| {
                    r.tonality_mean(t(ty), *a)
                        .unwrap()
                        .total_cmp(&r.tonality_mean(t(ty), *b).unwrap())
                })
                .unwrap()
        };
        let worst = |ty: &str| {
            Tonality::ALL
                .into_iter()
                .min_by(|a, b| {
                    r.tonality_mean(t(ty), *a)
                        .unwrap()
                        .total_cmp(&r.tonality_mean(t(ty), *b).unwrap())
                })
                .unwrap()
        };
        for ty in ["DICE", "DICR", "DIOE", "DIOR"] {
            assert_eq!(best(ty), Tonality::Cooperative, "{ty}");
            assert_eq!(worst(ty), Tonality::Hard, "{ty}");
        }
        assert_eq!(best("WAOR"), Tonality::Reciprocity);
        assert_eq!(worst("WACE"), Tonality::Cooperative);
        let waoe = |ton| r.tonality_mean(t("WAOE"), ton).unwrap();
        assert_abs_diff_eq!(waoe(Tonality::Cooperative), waoe(Tonality::Hard), epsilon = 1e-12);
        assert_abs_diff_eq!(waoe(Tonality::Cooperative) - waoe(Tonality::Reciprocity), 0.03, epsilon = 1e-12);
    }

    #[test]
    fn default_covers_everything() {
        let r = RateTable::default();
        r.check_covers(Typology::all()).unwrap();
        for ty in Typology::all() {
            let q = r.payment(ty).unwrap();
            assert!((0.0..=1.0).contains(&q));
        }
    }

    #[test]
    fn letter_falls_back_to_slot_mean() {
        let r = RateTable::default();
        let l = r.reaction(t("WAOR"), Action::letter(Tonality::Reciprocity)).unwrap();
        assert_abs_diff_eq!(l, 0.494, epsilon = 1e-12);
    }

    #[test]
    fn per_message_inverse() {
        let m = per_message_rate(0.5, 5);
        assert_abs_diff_eq!(1.0 - (1.0 - m).powi(5), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let r = RateTable::default();
        let back = RateTable::from_toml_str(&r.to_toml_string(), "x").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn missing_cell_is_an_error() {
        let text = "[reaction.WACE]\n\"hard@08:00\" = 0.2\n[payment]\nWACE = 0.5\n";
        let r = RateTable::from_toml_str(text, "x").unwrap();
        assert!(matches!(
            r.reaction(t("WACE"), Action::email(Tonality::Hard, TimeSlot::T1200)),
            Err(Error::MissingRateCell(_))
        ));
        assert!(matches!(r.payment(t("DICE")), Err(Error::MissingRateCell(_))));
        assert!(r.check_covers([t("WACE")]).is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        let text = "[reaction.WACE]\n\"hard@08:00\" = 1.2\n[payment]\nWACE = 0.5\n";
        assert!(RateTable::from_toml_str(text, "x").is_err());
    }
}
