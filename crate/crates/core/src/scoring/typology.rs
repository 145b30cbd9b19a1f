//! The four behavioral dimensions and the 16 typology labels built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Scores at or above this value fall on the high side of a dimension.
pub const CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Willingness,
    Ability,
    Organization,
    Rationality,
}

impl Dimension {
    /// Fixed letter order of a typology label.
    pub const ALL: [Dimension; 4] = [
        Dimension::Willingness,
        Dimension::Ability,
        Dimension::Organization,
        Dimension::Rationality,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Willingness => "willingness",
            Dimension::Ability => "ability",
            Dimension::Organization => "organization",
            Dimension::Rationality => "rationality",
        }
    }

    /// (high letter, low letter)
    pub fn letters(self) -> (char, char) {
        match self {
            Dimension::Willingness => ('W', 'D'),
            Dimension::Ability => ('A', 'I'),
            Dimension::Organization => ('O', 'C'),
            Dimension::Rationality => ('R', 'E'),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown dimension `{s}`")))
    }
}

/// One of the 16 debtor typologies.
///
/// Stored as four high/low bits in dimension order; bit 3 is willingness.
/// A set bit means the high side (W, A, O, R).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Typology(u8);

impl Typology {
    pub const COUNT: usize = 16;

    /// All labels, ordered alphabetically (DACE .. WIOR).
    pub fn all() -> [Typology; 16] {
        let mut out = [Typology(0); 16];
        for bits in 0..16u8 {
            let t = Typology(bits);
            out[t.index()] = t;
        }
        out
    }

    pub fn from_high_flags(flags: [bool; 4]) -> Self {
        let bits = flags
            .iter()
            .fold(0u8, |acc, &high| (acc << 1) | u8::from(high));
        Typology(bits)
    }

    pub fn is_high(self, dimension: Dimension) -> bool {
        (self.0 >> (3 - dimension.index())) & 1 == 1
    }

    pub fn high_flags(self) -> [bool; 4] {
        Dimension::ALL.map(|d| self.is_high(d))
    }

    /// Position in [`Typology::all`]. Alphabetical order puts D before W,
    /// A before I, C before O and E before R.
    pub fn index(self) -> usize {
        let [w, a, o, r] = self.high_flags();
        (usize::from(w) << 3) | (usize::from(!a) << 2) | (usize::from(o) << 1) | usize::from(r)
    }

    pub fn label(self) -> String {
        Dimension::ALL
            .iter()
            .map(|&d| {
                let (hi, lo) = d.letters();
                if self.is_high(d) {
                    hi
                } else {
                    lo
                }
            })
            .collect()
    }

    /// Classify four normalized scores, in dimension order, with the inclusive cutoff.
    pub fn classify(normalized: [f64; 4]) -> Self {
        Typology::from_high_flags(normalized.map(|s| s >= CUTOFF))
    }
}

// Alphabetical by label, so maps keyed by typology print in table order.
impl Ord for Typology {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.index().cmp(&other.index())
    }
}

impl PartialOrd for Typology {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Typology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Debug for Typology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Typology({})", self.label())
    }
}

impl FromStr for Typology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 4 {
            return Err(Error::Input(format!("typology label `{s}` must have 4 letters")));
        }
        let mut flags = [false; 4];
        for (i, d) in Dimension::ALL.iter().enumerate() {
            let (hi, lo) = d.letters();
            flags[i] = match chars[i].to_ascii_uppercase() {
                c if c == hi => true,
                c if c == lo => false,
                c => {
                    return Err(Error::Input(format!(
                        "typology label `{s}`: letter {c} is not {hi} or {lo} ({d})"
                    )))
                }
            };
        }
        Ok(Typology::from_high_flags(flags))
    }
}

impl Serialize for Typology {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Typology {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    const TABLE_ONE: [&str; 16] = [
        "WAOR", "WACR", "WICR", "WIOR", "WAOE", "WACE", "WICE", "WIOE", "DAOE", "DACE", "DICE",
        "DIOE", "DAOR", "DACR", "DICR", "DIOR",
    ];

    #[test]
    fn sixteen_labels_match_overview_table() {
        let ours: BTreeSet<String> = Typology::all().iter().map(|t| t.label()).collect();
        let table: BTreeSet<String> = TABLE_ONE.iter().map(|s| s.to_string()).collect();
        assert_eq!(ours, table);
        assert_eq!(ours.len(), 16);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(Typology::classify([0.7, 0.6, 0.4, 0.3]).label(), "WACE");
        assert_eq!(Typology::classify([0.5, 0.5, 0.5, 0.5]).label(), "WAOR");
        assert_eq!(Typology::classify([0.49, 0.0, 0.99, 0.5]).label(), "DIOR");
    }

    #[test]
    fn parse_round_trip() {
        for t in Typology::all() {
            assert_eq!(t.label().parse::<Typology>().unwrap(), t);
            assert_eq!(Typology::all()[t.index()], t);
        }
        let labels: Vec<String> = Typology::all().iter().map(|t| t.label()).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert!("WXYZ".parse::<Typology>().is_err());
        assert!("WAO".parse::<Typology>().is_err());
    }
}
