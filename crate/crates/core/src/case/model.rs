use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::policy::{Channel, Tonality, TimeSlot};

pub type Timestamp = DateTime<Utc>;

/// Euro cents.
pub type Cents = u64;

/// Scalar value of a static case attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StaticValue {
    Flag(bool),
    Number(f64),
}

impl StaticValue {
    pub fn as_f64(self) -> f64 {
        match self {
            StaticValue::Flag(b) => f64::from(u8::from(b)),
            StaticValue::Number(x) => x,
        }
    }

    /// Flags as is; numbers are true when non-zero.
    pub fn as_flag(self) -> bool {
        match self {
            StaticValue::Flag(b) => b,
            StaticValue::Number(x) => x != 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaymentMethod {
    #[default]
    PaymentPage,
    BankTransfer,
    DirectDebit,
    /// Paid to the original creditor instead of the collection agency.
    DirectToCreditor,
}

/// Text-derived flags of one inbound email. NLP happens upstream.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InboundEmail {
    pub insult: bool,
    pub repeated_punctuation: bool,
    pub formal_greeting: bool,
    pub word_count: u32,
    pub emoji: bool,
    pub attachment: bool,
    /// Share of uppercase letters among all letters, in [0, 1].
    pub uppercase_ratio: f64,
    pub requests_instalment_plan: bool,
    pub requests_payment_pause: bool,
}

/// Closed event taxonomy of a collection case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    MessageSent {
        tonality: Tonality,
        channel: Channel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slot: Option<TimeSlot>,
    },
    PaymentPageVisit,
    InboundEmail(InboundEmail),
    InstalmentPlanRequested,
    InstalmentPlanSigned,
    InstalmentPlanCancelled,
    InstalmentLate,
    PaymentPauseTaken,
    PromiseToPayMade,
    PromiseToPayKept,
    PromiseToPayBroken,
    PartialPayment {
        amount: Cents,
        #[serde(default)]
        method: PaymentMethod,
    },
    FullPayment {
        amount: Cents,
        #[serde(default)]
        method: PaymentMethod,
    },
    PaymentAttemptExpired,
    DisputeRaised,
    DebtReductionOffered,
    FeeIncreaseApplied,
    CourtProcessInitiated,
    InsolvencyInitiated,
    DebtCounselingInvolved,
}

/// Payload-free discriminant of [`EventKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    MessageSent,
    PaymentPageVisit,
    InboundEmail,
    InstalmentPlanRequested,
    InstalmentPlanSigned,
    InstalmentPlanCancelled,
    InstalmentLate,
    PaymentPauseTaken,
    PromiseToPayMade,
    PromiseToPayKept,
    PromiseToPayBroken,
    PartialPayment,
    FullPayment,
    PaymentAttemptExpired,
    DisputeRaised,
    DebtReductionOffered,
    FeeIncreaseApplied,
    CourtProcessInitiated,
    InsolvencyInitiated,
    DebtCounselingInvolved,
}

impl EventTag {
    pub const ALL: [EventTag; 20] = [
        EventTag::MessageSent,
        EventTag::PaymentPageVisit,
        EventTag::InboundEmail,
        EventTag::InstalmentPlanRequested,
        EventTag::InstalmentPlanSigned,
        EventTag::InstalmentPlanCancelled,
        EventTag::InstalmentLate,
        EventTag::PaymentPauseTaken,
        EventTag::PromiseToPayMade,
        EventTag::PromiseToPayKept,
        EventTag::PromiseToPayBroken,
        EventTag::PartialPayment,
        EventTag::FullPayment,
        EventTag::PaymentAttemptExpired,
        EventTag::DisputeRaised,
        EventTag::DebtReductionOffered,
        EventTag::FeeIncreaseApplied,
        EventTag::CourtProcessInitiated,
        EventTag::InsolvencyInitiated,
        EventTag::DebtCounselingInvolved,
    ];

    /// Debtor-side events that count as a reaction to the latest message.
    pub const REACTIONS: [EventTag; 9] = [
        EventTag::PaymentPageVisit,
        EventTag::InboundEmail,
        EventTag::InstalmentPlanRequested,
        EventTag::InstalmentPlanSigned,
        EventTag::PaymentPauseTaken,
        EventTag::PromiseToPayMade,
        EventTag::PartialPayment,
        EventTag::FullPayment,
        EventTag::DisputeRaised,
    ];

    pub fn is_reaction(self) -> bool {
        EventTag::REACTIONS.contains(&self)
    }

    pub fn is_payment(self) -> bool {
        matches!(self, EventTag::PartialPayment | EventTag::FullPayment)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::MessageSent => "message_sent",
            EventTag::PaymentPageVisit => "payment_page_visit",
            EventTag::InboundEmail => "inbound_email",
            EventTag::InstalmentPlanRequested => "instalment_plan_requested",
            EventTag::InstalmentPlanSigned => "instalment_plan_signed",
            EventTag::InstalmentPlanCancelled => "instalment_plan_cancelled",
            EventTag::InstalmentLate => "instalment_late",
            EventTag::PaymentPauseTaken => "payment_pause_taken",
            EventTag::PromiseToPayMade => "promise_to_pay_made",
            EventTag::PromiseToPayKept => "promise_to_pay_kept",
            EventTag::PromiseToPayBroken => "promise_to_pay_broken",
            EventTag::PartialPayment => "partial_payment",
            EventTag::FullPayment => "full_payment",
            EventTag::PaymentAttemptExpired => "payment_attempt_expired",
            EventTag::DisputeRaised => "dispute_raised",
            EventTag::DebtReductionOffered => "debt_reduction_offered",
            EventTag::FeeIncreaseApplied => "fee_increase_applied",
            EventTag::CourtProcessInitiated => "court_process_initiated",
            EventTag::InsolvencyInitiated => "insolvency_initiated",
            EventTag::DebtCounselingInvolved => "debt_counseling_involved",
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl EventKind {
    pub fn tag(&self) -> EventTag {
        match self {
            EventKind::MessageSent { .. } => EventTag::MessageSent,
            EventKind::PaymentPageVisit => EventTag::PaymentPageVisit,
            EventKind::InboundEmail(_) => EventTag::InboundEmail,
            EventKind::InstalmentPlanRequested => EventTag::InstalmentPlanRequested,
            EventKind::InstalmentPlanSigned => EventTag::InstalmentPlanSigned,
            EventKind::InstalmentPlanCancelled => EventTag::InstalmentPlanCancelled,
            EventKind::InstalmentLate => EventTag::InstalmentLate,
            EventKind::PaymentPauseTaken => EventTag::PaymentPauseTaken,
            EventKind::PromiseToPayMade => EventTag::PromiseToPayMade,
            EventKind::PromiseToPayKept => EventTag::PromiseToPayKept,
            EventKind::PromiseToPayBroken => EventTag::PromiseToPayBroken,
            EventKind::PartialPayment { .. } => EventTag::PartialPayment,
            EventKind::FullPayment { .. } => EventTag::FullPayment,
            EventKind::PaymentAttemptExpired => EventTag::PaymentAttemptExpired,
            EventKind::DisputeRaised => EventTag::DisputeRaised,
            EventKind::DebtReductionOffered => EventTag::DebtReductionOffered,
            EventKind::FeeIncreaseApplied => EventTag::FeeIncreaseApplied,
            EventKind::CourtProcessInitiated => EventTag::CourtProcessInitiated,
            EventKind::InsolvencyInitiated => EventTag::InsolvencyInitiated,
            EventKind::DebtCounselingInvolved => EventTag::DebtCounselingInvolved,
        }
    }

    pub fn payment_method(&self) -> Option<PaymentMethod> {
        match self {
            EventKind::PartialPayment { method, .. } | EventKind::FullPayment { method, .. } => {
                Some(*method)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEvent {
    pub timestamp: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl CaseEvent {
    pub fn new(timestamp: Timestamp, kind: EventKind) -> Self {
        CaseEvent { timestamp, kind }
    }

    pub fn tag(&self) -> EventTag {
        self.kind.tag()
    }
}

/// One collection case. Events are kept sorted by timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebtorCase {
    pub case_id: String,
    pub debtor_id: String,
    pub main_claim_amount: Cents,
    pub fee_amount: Cents,
    pub opened_at: Timestamp,
    #[serde(default)]
    pub static_attrs: BTreeMap<String, StaticValue>,
    #[serde(default)]
    pub events: Vec<CaseEvent>,
}

impl DebtorCase {
    pub fn new(case_id: impl Into<String>, debtor_id: impl Into<String>, opened_at: Timestamp) -> Self {
        DebtorCase {
            case_id: case_id.into(),
            debtor_id: debtor_id.into(),
            main_claim_amount: 0,
            fee_amount: 0,
            opened_at,
            static_attrs: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    pub fn with_amounts(mut self, main_claim: Cents, fee: Cents) -> Self {
        self.main_claim_amount = main_claim;
        self.fee_amount = fee;
        self
    }

    pub fn with_attr(mut self, name: &str, value: StaticValue) -> Self {
        self.static_attrs.insert(name.to_string(), value);
        self
    }

    /// Insert keeping timestamp order; equal timestamps keep insertion order.
    pub fn push_event(&mut self, event: CaseEvent) {
        let at = self.events.partition_point(|e| e.timestamp <= event.timestamp);
        self.events.insert(at, event);
    }

    pub fn with_event(mut self, timestamp: Timestamp, kind: EventKind) -> Self {
        self.push_event(CaseEvent::new(timestamp, kind));
        self
    }

    pub fn is_time_ordered(&self) -> bool {
        self.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }

    pub fn attr(&self, name: &str) -> Option<StaticValue> {
        self.static_attrs.get(name).copied()
    }

    pub fn events_of(&self, tag: EventTag) -> impl Iterator<Item = &CaseEvent> {
        self.events.iter().filter(move |e| e.tag() == tag)
    }

    pub fn has(&self, tag: EventTag) -> bool {
        self.events_of(tag).next().is_some()
    }

    pub fn first(&self, tag: EventTag) -> Option<&CaseEvent> {
        self.events_of(tag).next()
    }
}
