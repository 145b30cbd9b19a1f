//! Exposure and outcome counts per (typology, action).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::case::{DebtorCase, EventKind};
use crate::error::{Error, Result};
use crate::policy::{Action, Channel, ARMS};
use crate::scoring::Typology;
use crate::simulator::{attribute, TraceRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub exposures: u64,
    pub reactions: u64,
    pub payments: u64,
}

impl CellCounts {
    pub fn add(&mut self, other: CellCounts) {
        self.exposures += other.exposures;
        self.reactions += other.reactions;
        self.payments += other.payments;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeCounts {
    cells: Vec<[CellCounts; ARMS]>,
}

impl Default for OutcomeCounts {
    fn default() -> Self {
        OutcomeCounts {
            cells: vec![[CellCounts::default(); ARMS]; Typology::COUNT],
        }
    }
}

impl OutcomeCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, typology: Typology, action: Action, reacted: bool, paid: bool) {
        let c = &mut self.cells[typology.index()][action.arm_index()];
        c.exposures += 1;
        c.reactions += u64::from(reacted);
        c.payments += u64::from(paid);
    }

    pub fn add_cell(&mut self, typology: Typology, action: Action, counts: CellCounts) {
        self.cells[typology.index()][action.arm_index()].add(counts);
    }

    pub fn get(&self, typology: Typology, action: Action) -> CellCounts {
        self.cells[typology.index()][action.arm_index()]
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        for (row, other_row) in self.cells.iter_mut().zip(&other.cells) {
            for (c, o) in row.iter_mut().zip(other_row) {
                c.add(*o);
            }
        }
    }

    /// Sum over the actions selected by `keep`.
    pub fn sum_where(&self, typology: Typology, mut keep: impl FnMut(Action) -> bool) -> CellCounts {
        let mut total = CellCounts::default();
        for (i, c) in self.cells[typology.index()].iter().enumerate() {
            let a = Action::from_arm_index(i).expect("dense index");
            if keep(a) {
                total.add(*c);
            }
        }
        total
    }

    pub fn typology_total(&self, typology: Typology) -> CellCounts {
        self.sum_where(typology, |_| true)
    }

    pub fn total(&self) -> CellCounts {
        let mut t = CellCounts::default();
        for ty in Typology::all() {
            t.add(self.typology_total(ty));
        }
        t
    }

    pub fn is_empty(&self) -> bool {
        self.total().exposures == 0
    }

    /// Non-empty cells in typology and arm order.
    pub fn iter(&self) -> impl Iterator<Item = (Typology, Action, CellCounts)> + '_ {
        Typology::all().into_iter().flat_map(move |t| {
            self.cells[t.index()]
                .iter()
                .enumerate()
                .filter(|(_, c)| c.exposures > 0)
                .map(move |(i, c)| (t, Action::from_arm_index(i).expect("dense index"), *c))
        })
    }

    pub fn from_trace<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> Self {
        let mut counts = OutcomeCounts::new();
        for r in records {
            counts.record(r.typology, r.action, r.reacted, r.paid);
        }
        counts
    }
}

/// Reactions and payments found in a case log, attributed to messages.
#[derive(Debug, Clone, Default)]
pub struct CaseOutcomes {
    pub counts: OutcomeCounts,
    /// Reaction events with no earlier message.
    pub unattributed_reactions: u64,
}

fn message_action(kind: &EventKind) -> Result<Option<Action>> {
    match kind {
        EventKind::MessageSent {
            tonality,
            channel,
            slot,
        } => match (channel, slot) {
            (Channel::Email, Some(s)) => Ok(Some(Action::email(*tonality, *s))),
            (Channel::Email, None) => Err(Error::Input("email message without a slot".into())),
            (Channel::Letter, _) => Ok(Some(Action::letter(*tonality))),
        },
        _ => Ok(None),
    }
}

/// Each reaction or payment event is credited to the most recent message
/// sent at or before it. A message counts at most one reaction and one
/// payment however many events follow it.
pub fn outcomes_from_cases(cases: &[DebtorCase], typologies: &[Typology]) -> Result<CaseOutcomes> {
    if cases.len() != typologies.len() {
        return Err(Error::Invariant(format!(
            "{} cases but {} typologies",
            cases.len(),
            typologies.len()
        )));
    }
    let mut out = CaseOutcomes::default();
    for (case, &typology) in cases.iter().zip(typologies) {
        let mut sent = Vec::new();
        let mut actions = Vec::new();
        for ev in &case.events {
            if let Some(a) = message_action(&ev.kind)
                .map_err(|e| Error::Input(format!("case {}: {e}", case.case_id)))?
            {
                sent.push(ev.timestamp.timestamp_millis());
                actions.push(a);
            }
        }
        let mut reacted = vec![false; sent.len()];
        let mut paid = vec![false; sent.len()];
        for ev in &case.events {
            let tag = ev.tag();
            if !tag.is_reaction() && !tag.is_payment() {
                continue;
            }
            match attribute(&sent, ev.timestamp.timestamp_millis()) {
                Some(i) => {
                    reacted[i] |= tag.is_reaction();
                    paid[i] |= tag.is_payment();
                }
                None if tag.is_reaction() => out.unattributed_reactions += 1,
                None => {}
            }
        }
        for i in 0..sent.len() {
            out.counts.record(typology, actions[i], reacted[i], paid[i]);
        }
    }
    Ok(out)
}

// Sparse map form: typology -> action -> counts, empty cells omitted.
impl Serialize for OutcomeCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map: BTreeMap<Typology, BTreeMap<Action, CellCounts>> = BTreeMap::new();
        for (t, a, c) in self.iter() {
            map.entry(t).or_default().insert(a, c);
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OutcomeCounts {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<Typology, BTreeMap<Action, CellCounts>>::deserialize(deserializer)?;
        let mut out = OutcomeCounts::new();
        for (t, row) in map {
            for (a, c) in row {
                if c.reactions > c.exposures || c.payments > c.exposures {
                    return Err(serde::de::Error::custom(format!("{t} {a}: more outcomes than exposures")));
                }
                out.add_cell(t, a, c);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{CaseEvent, EventKind};
    use crate::policy::{TimeSlot, Tonality};
    use chrono::{TimeZone, Utc};

    fn at(h: u32) -> chrono::DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 3, 1, h, 0, 0).unwrap()
    }

    #[test]
    fn case_log_attribution() {
        let mut case = DebtorCase::new("C", "D", at(0));
        let send = |t| EventKind::MessageSent {
            tonality: t,
            channel: Channel::Email,
            slot: Some(TimeSlot::T0800),
        };
        case.push_event(CaseEvent::new(at(1), EventKind::PaymentPageVisit));
        case.push_event(CaseEvent::new(at(8), send(Tonality::Hard)));
        case.push_event(CaseEvent::new(at(9), EventKind::PaymentPageVisit));
        case.push_event(CaseEvent::new(at(10), EventKind::PaymentPageVisit));
        case.push_event(CaseEvent::new(at(12), send(Tonality::Cooperative)));
        case.push_event(CaseEvent::new(at(14), send(Tonality::Informative)));
        case.push_event(CaseEvent::new(
            at(15),
            EventKind::FullPayment {
                amount: 100,
                method: Default::default(),
            },
        ));
        let ty: Typology = "WACE".parse().unwrap();
        let out = outcomes_from_cases(&[case], &[ty]).unwrap();
        assert_eq!(out.unattributed_reactions, 1);
        let e = |t| Action::email(t, TimeSlot::T0800);
        assert_eq!(out.counts.get(ty, e(Tonality::Hard)), CellCounts { exposures: 1, reactions: 1, payments: 0 });
        assert_eq!(out.counts.get(ty, e(Tonality::Cooperative)), CellCounts { exposures: 1, reactions: 0, payments: 0 });
        assert_eq!(out.counts.get(ty, e(Tonality::Informative)), CellCounts { exposures: 1, reactions: 1, payments: 1 });
    }

    #[test]
    fn serde_is_sparse_and_round_trips() {
        let mut c = OutcomeCounts::new();
        let ty: Typology = "DICE".parse().unwrap();
        c.record(ty, Action::letter(Tonality::Hard), true, false);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v, serde_json::json!({"DICE": {"hard": {"exposures": 1, "reactions": 1, "payments": 0}}}));
        let back: OutcomeCounts = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
