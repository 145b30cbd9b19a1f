use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tonality {
    Cooperative,
    Informative,
    Hard,
    SocialComparison,
    Reciprocity,
}

impl Tonality {
    pub const ALL: [Tonality; 5] = [
        Tonality::Cooperative,
        Tonality::Informative,
        Tonality::Hard,
        Tonality::SocialComparison,
        Tonality::Reciprocity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tonality::Cooperative => "cooperative",
            Tonality::Informative => "informative",
            Tonality::Hard => "hard",
            Tonality::SocialComparison => "social_comparison",
            Tonality::Reciprocity => "reciprocity",
        }
    }

    /// Short description of the message framing.
    pub fn framing(self) -> &'static str {
        match self {
            Tonality::Cooperative => "friendly and understanding",
            Tonality::Informative => "neutral, only the relevant information",
            Tonality::Hard => "stresses negative consequences",
            Tonality::SocialComparison => "describes how a social reference group behaves",
            Tonality::Reciprocity => "stresses the creditor's effort behind the product",
        }
    }
}

impl fmt::Display for Tonality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tonality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tonality::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown tonality `{s}`")))
    }
}

/// Four-hour email send window, named by its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeSlot {
    #[serde(rename = "08:00", alias = "T0800")]
    T0800,
    #[serde(rename = "12:00", alias = "T1200")]
    T1200,
    #[serde(rename = "16:00", alias = "T1600")]
    T1600,
    #[serde(rename = "20:00", alias = "T2000")]
    T2000,
}

impl TimeSlot {
    pub const ALL: [TimeSlot; 4] = [TimeSlot::T0800, TimeSlot::T1200, TimeSlot::T1600, TimeSlot::T2000];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Local send window `[start, end)` in hours.
    pub fn window(self) -> (u32, u32) {
        let start = 6 + 4 * self as u32;
        (start, start + 4)
    }

    pub fn midpoint_hour(self) -> u32 {
        self.window().0 + 2
    }

    /// Slot whose window contains `hour`; none outside 06:00-22:00.
    pub fn containing(hour: u32) -> Option<TimeSlot> {
        TimeSlot::ALL.into_iter().find(|s| {
            let (a, b) = s.window();
            (a..b).contains(&hour)
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeSlot::T0800 => "08:00",
            TimeSlot::T1200 => "12:00",
            TimeSlot::T1600 => "16:00",
            TimeSlot::T2000 => "20:00",
        }
    }
}

impl fmt::Display for TimeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimeSlot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeSlot::ALL
            .into_iter()
            .find(|t| t.as_str() == s || format!("{t:?}") == s)
            .ok_or_else(|| Error::Input(format!("unknown time slot `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Email,
    Letter,
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "email" => Ok(Channel::Email),
            "letter" => Ok(Channel::Letter),
            other => Err(Error::Input(format!("unknown channel `{other}`"))),
        }
    }
}

/// A message choice. Letters carry no slot since their delivery time cannot be chosen.
///
/// Serializes as its key, e.g. `"reciprocity@20:00"` or `"hard"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub tonality: Tonality,
    pub slot: Option<TimeSlot>,
}

/// Number of email arms (tonality × slot).
pub const EMAIL_ARMS: usize = 20;
/// Number of letter arms (tonality only).
pub const LETTER_ARMS: usize = 5;
/// Arms tracked per typology context.
pub const ARMS: usize = EMAIL_ARMS + LETTER_ARMS;

impl Action {
    pub fn email(tonality: Tonality, slot: TimeSlot) -> Self {
        Action {
            tonality,
            slot: Some(slot),
        }
    }

    pub fn letter(tonality: Tonality) -> Self {
        Action {
            tonality,
            slot: None,
        }
    }

    pub fn channel(self) -> Channel {
        if self.slot.is_some() {
            Channel::Email
        } else {
            Channel::Letter
        }
    }

    /// The 20 email actions, tonality-major.
    pub fn email_arms() -> impl Iterator<Item = Action> {
        Tonality::ALL
            .into_iter()
            .flat_map(|t| TimeSlot::ALL.into_iter().map(move |s| Action::email(t, s)))
    }

    pub fn letter_arms() -> impl Iterator<Item = Action> {
        Tonality::ALL.into_iter().map(Action::letter)
    }

    pub fn arms_for(channel: Channel) -> Vec<Action> {
        match channel {
            Channel::Email => Action::email_arms().collect(),
            Channel::Letter => Action::letter_arms().collect(),
        }
    }

    /// Dense index in `0..ARMS`: email arms first, then letters.
    pub fn arm_index(self) -> usize {
        match self.slot {
            Some(slot) => self.tonality.index() * 4 + slot.index(),
            None => EMAIL_ARMS + self.tonality.index(),
        }
    }

    pub fn from_arm_index(index: usize) -> Option<Action> {
        if index < EMAIL_ARMS {
            Some(Action::email(Tonality::ALL[index / 4], TimeSlot::ALL[index % 4]))
        } else if index < ARMS {
            Some(Action::letter(Tonality::ALL[index - EMAIL_ARMS]))
        } else {
            None
        }
    }

    /// `tonality@slot` for email, bare tonality for letters.
    pub fn key(self) -> String {
        match self.slot {
            Some(slot) => format!("{}@{}", self.tonality, slot),
            None => self.tonality.to_string(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('@') {
            Some((t, slot)) => Ok(Action::email(t.parse()?, slot.parse()?)),
            None => Ok(Action::letter(s.parse()?)),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
