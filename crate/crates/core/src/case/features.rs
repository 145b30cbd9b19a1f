//! Feature registry: how each weighted feature is read off a case.
//!
//! Every feature declares the event kinds and static attributes it reads.
//! Boolean features are 0/1 and read as 0 when the events they look for are
//! absent. A feature value of `None` means "unknown" (a missing static
//! attribute, or a duration that never started) and standardizes to 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::{DebtorCase, EventKind, EventTag, PaymentMethod, Timestamp};
use crate::error::{Error, Result};
use crate::scoring::{Dimension, WeightTable};

const DAY_SECONDS: f64 = 86_400.0;

/// Static attribute names read by the registry.
pub mod attr {
    pub const EMAIL_VALID: &str = "email_valid";
    pub const NAME_VALID: &str = "name_valid";
    pub const ADDRESS_VALID: &str = "address_valid";
    pub const NAME_IN_EMAIL: &str = "name_in_email";
    pub const FRAUDULENT: &str = "fraudulent";
    pub const DECEASED_OR_IMPRISONED: &str = "deceased_or_imprisoned";
    pub const RECURRENT_DEBTOR: &str = "recurrent_debtor";
    pub const OTHER_COLLECTION_CASE: &str = "other_collection_case";
    pub const RETURNED_ITEM_LATE: &str = "returned_item_late";
    pub const DEVICE_COUNT: &str = "device_count";
    pub const APPLE_DEVICE: &str = "apple_device";
    pub const PAIR_SCORE: &str = "pair_score";
    pub const SCHUFA_SCORE: &str = "schufa_score";
    pub const REGIONAL_RENT_PRICE: &str = "regional_rent_price";
    pub const REGIONAL_UNEMPLOYMENT_RATIO: &str = "regional_unemployment_ratio";
    pub const REGIONAL_DISPOSABLE_INCOME: &str = "regional_disposable_income";

    pub const ALL: [&str; 16] = [
        EMAIL_VALID,
        NAME_VALID,
        ADDRESS_VALID,
        NAME_IN_EMAIL,
        FRAUDULENT,
        DECEASED_OR_IMPRISONED,
        RECURRENT_DEBTOR,
        OTHER_COLLECTION_CASE,
        RETURNED_ITEM_LATE,
        DEVICE_COUNT,
        APPLE_DEVICE,
        PAIR_SCORE,
        SCHUFA_SCORE,
        REGIONAL_RENT_PRICE,
        REGIONAL_UNEMPLOYMENT_RATIO,
        REGIONAL_DISPOSABLE_INCOME,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Boolean,
    Continuous,
}

/// Case-wide inputs a feature may read besides events and static attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CaseInput {
    OpenedAt,
    MainClaim,
    Fee,
}

type Extractor = fn(&DebtorCase, &ExtractionContext) -> Option<f64>;

pub struct FeatureDef {
    pub id: &'static str,
    pub question: &'static str,
    pub kind: FeatureKind,
    pub events: &'static [EventTag],
    pub attrs: &'static [&'static str],
    pub inputs: &'static [CaseInput],
    extract: Extractor,
}

impl FeatureDef {
    pub fn extract(&self, case: &DebtorCase, ctx: &ExtractionContext) -> Option<f64> {
        (self.extract)(case, ctx)
    }

    pub fn depends_on(&self, tag: EventTag) -> bool {
        self.events.contains(&tag)
    }
}

impl std::fmt::Debug for FeatureDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureDef")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("events", &self.events)
            .field("attrs", &self.attrs)
            .finish()
    }
}

/// Settings that turn a case into feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionContext {
    /// Length of the observation window after `opened_at`, in days. Also the
    /// censoring value for cases that never reacted.
    pub observation_window_days: f64,
    /// "High score" cutoffs; `None` means "use the pool median" and must be
    /// resolved with [`ExtractionContext::resolved_for`] before extraction.
    pub pair_high_threshold: Option<f64>,
    pub schufa_high_threshold: Option<f64>,
}

impl Default for ExtractionContext {
    fn default() -> Self {
        ExtractionContext {
            observation_window_days: 56.0,
            pair_high_threshold: None,
            schufa_high_threshold: None,
        }
    }
}

impl ExtractionContext {
    /// Fill unset thresholds with the pool medians of the underlying scores.
    pub fn resolved_for(&self, pool: &[DebtorCase]) -> ExtractionContext {
        let mut out = self.clone();
        if out.pair_high_threshold.is_none() {
            out.pair_high_threshold = attr_median(pool, attr::PAIR_SCORE);
        }
        if out.schufa_high_threshold.is_none() {
            out.schufa_high_threshold = attr_median(pool, attr::SCHUFA_SCORE);
        }
        out
    }

    fn as_of(&self, case: &DebtorCase) -> Timestamp {
        case.opened_at + chrono::Duration::seconds((self.observation_window_days * DAY_SECONDS) as i64)
    }
}

fn attr_median(pool: &[DebtorCase], name: &str) -> Option<f64> {
    let mut values: Vec<f64> = pool
        .iter()
        .filter_map(|c| c.attr(name).map(|v| v.as_f64()))
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Ordered `(feature_id, raw value)` pairs for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dimension: Dimension,
    pub values: Vec<(String, Option<f64>)>,
}

impl FeatureVector {
    pub fn get(&self, id: &str) -> Option<Option<f64>> {
        self.values.iter().find(|(f, _)| f == id).map(|(_, v)| *v)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|(id, _)| id.as_str())
    }
}

// ---------------------------------------------------------------------------
// helpers

fn flag(b: bool) -> Option<f64> {
    Some(f64::from(u8::from(b)))
}

fn days_between(a: Timestamp, b: Timestamp) -> f64 {
    (b - a).num_seconds() as f64 / DAY_SECONDS
}

fn has(case: &DebtorCase, tag: EventTag) -> Option<f64> {
    flag(case.has(tag))
}

fn attr_flag(case: &DebtorCase, name: &str) -> Option<f64> {
    case.attr(name).map(|v| f64::from(u8::from(v.as_flag())))
}

fn attr_number(case: &DebtorCase, name: &str) -> Option<f64> {
    case.attr(name).map(|v| v.as_f64()).filter(|v| v.is_finite())
}

fn emails(case: &DebtorCase) -> impl Iterator<Item = &super::model::InboundEmail> {
    case.events.iter().filter_map(|e| match &e.kind {
        EventKind::InboundEmail(m) => Some(m),
        _ => None,
    })
}

fn any_email(case: &DebtorCase, pred: impl Fn(&super::model::InboundEmail) -> bool) -> Option<f64> {
    flag(emails(case).any(pred))
}

fn paid_with(case: &DebtorCase, method: PaymentMethod) -> Option<f64> {
    flag(case.events.iter().any(|e| e.kind.payment_method() == Some(method)))
}

/// Some event of `later` at or after the first event of `earlier`.
fn any_after(case: &DebtorCase, earlier: EventTag, later: &[EventTag]) -> Option<f64> {
    let Some(start) = case.first(earlier).map(|e| e.timestamp) else {
        return flag(false);
    };
    flag(case
        .events
        .iter()
        .any(|e| later.contains(&e.tag()) && e.timestamp >= start))
}

/// Some event of `tag` that no fee increase precedes.
fn before_any_fee_increase(case: &DebtorCase, tag: EventTag) -> Option<f64> {
    let fee_at = case.first(EventTag::FeeIncreaseApplied).map(|e| e.timestamp);
    flag(case
        .events_of(tag)
        .any(|e| fee_at.is_none_or(|f| e.timestamp < f)))
}

fn solutions_taken(case: &DebtorCase) -> usize {
    case.events
        .iter()
        .filter(|e| matches!(e.tag(), EventTag::InstalmentPlanSigned | EventTag::PaymentPauseTaken))
        .count()
}

fn above(value: Option<f64>, threshold: Option<f64>) -> Option<f64> {
    match (value, threshold) {
        (Some(v), Some(t)) => flag(v > t),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// extractors

fn asked_instalment_via_email(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.requests_instalment_plan)
}
fn asked_pause_via_email(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.requests_payment_pause)
}
fn promised_payment_date(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::PromiseToPayMade)
}
fn requested_instalment_plan(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::InstalmentPlanRequested)
}
fn payment_solution_taken(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(solutions_taken(c) > 0)
}
fn signed_instalment_plan(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::InstalmentPlanSigned)
}
fn partial_payment_within_60d(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(c
        .events_of(EventTag::PartialPayment)
        .any(|e| days_between(c.opened_at, e.timestamp) <= 60.0))
}
fn payment_page_visited(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::PaymentPageVisit)
}
fn debt_counseling(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::DebtCounselingInvolved)
}
fn name_in_email(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::NAME_IN_EMAIL)
}
fn fraudulent_case(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::FRAUDULENT)
}
/// Days from opening until full payment, or until the end of the window.
fn debt_age_days(c: &DebtorCase, ctx: &ExtractionContext) -> Option<f64> {
    let end = c
        .first(EventTag::FullPayment)
        .map(|e| e.timestamp)
        .unwrap_or_else(|| ctx.as_of(c));
    Some(days_between(c.opened_at, end).max(0.0))
}
fn any_reaction(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(c.events.iter().any(|e| e.tag().is_reaction()))
}
fn days_to_first_reaction(c: &DebtorCase, ctx: &ExtractionContext) -> Option<f64> {
    let first = c.events.iter().find(|e| e.tag().is_reaction());
    Some(match first {
        Some(e) => days_between(c.opened_at, e.timestamp).max(0.0),
        None => ctx.observation_window_days,
    })
}
fn debt_disputed(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::DisputeRaised)
}
fn name_valid(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::NAME_VALID)
}
fn email_valid(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::EMAIL_VALID)
}
fn address_valid(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::ADDRESS_VALID)
}
fn court_process(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::CourtProcessInitiated)
}
fn multiple_solutions(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(solutions_taken(c) > 1)
}
fn direct_debit(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    paid_with(c, PaymentMethod::DirectDebit)
}

fn pair_score(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::PAIR_SCORE)
}
fn pair_score_high(c: &DebtorCase, ctx: &ExtractionContext) -> Option<f64> {
    above(attr_number(c, attr::PAIR_SCORE), ctx.pair_high_threshold)
}
fn claim_to_rent_ratio(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    let rent = attr_number(c, attr::REGIONAL_RENT_PRICE).filter(|r| *r > 0.0)?;
    Some(c.main_claim_amount as f64 / 100.0 / rent)
}
fn schufa_score(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::SCHUFA_SCORE)
}
fn schufa_score_high(c: &DebtorCase, ctx: &ExtractionContext) -> Option<f64> {
    above(attr_number(c, attr::SCHUFA_SCORE), ctx.schufa_high_threshold)
}
fn debt_paid(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::FullPayment)
}
fn deceased_or_imprisoned(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::DECEASED_OR_IMPRISONED)
}
fn insolvency_initiated(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::InsolvencyInitiated)
}
fn multiple_devices(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::DEVICE_COUNT).map(|n| f64::from(u8::from(n > 1.0)))
}
fn apple_device(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::APPLE_DEVICE)
}
fn regional_rent_price(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::REGIONAL_RENT_PRICE)
}
fn regional_unemployment_ratio(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::REGIONAL_UNEMPLOYMENT_RATIO)
}
fn regional_disposable_income(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_number(c, attr::REGIONAL_DISPOSABLE_INCOME)
}
/// Euros.
fn main_claim_amount(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    Some(c.main_claim_amount as f64 / 100.0)
}
fn recurrent_debtor(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::RECURRENT_DEBTOR)
}

fn kept_payment_promise(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(c.has(EventTag::PromiseToPayKept) && !c.has(EventTag::PromiseToPayBroken))
}
fn kept_instalment_schedule(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    flag(c.has(EventTag::InstalmentPlanSigned)
        && !c.has(EventTag::InstalmentLate)
        && !c.has(EventTag::InstalmentPlanCancelled))
}
fn instalment_late(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::InstalmentLate)
}
fn instalment_plan_cancelled(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::InstalmentPlanCancelled)
}
/// Days from the first request to the first signature after it; unknown without a signature.
fn days_to_sign_instalment_plan(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    let signed = c.first(EventTag::InstalmentPlanSigned)?.timestamp;
    let requested = c
        .events_of(EventTag::InstalmentPlanRequested)
        .map(|e| e.timestamp)
        .find(|t| *t <= signed)
        .unwrap_or(signed);
    Some(days_between(requested, signed))
}
fn returned_item_late(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::RETURNED_ITEM_LATE)
}
fn paid_creditor_directly(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    paid_with(c, PaymentMethod::DirectToCreditor)
}
fn other_collection_case(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    attr_flag(c, attr::OTHER_COLLECTION_CASE)
}
fn payment_attempt_expired(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    has(c, EventTag::PaymentAttemptExpired)
}
fn email_attachments(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.attachment)
}

fn insulting_language(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.insult)
}
fn repeated_punctuation(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.repeated_punctuation)
}
fn formal_greeting(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.formal_greeting)
}
fn email_length_extreme(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.word_count < 20 || m.word_count > 100)
}
fn emoji_used(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_email(c, |m| m.emoji)
}
/// Two or more inbound emails between consecutive outbound messages.
fn multiple_replies_to_one_email(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    let mut seen_outbound = false;
    let mut replies = 0u32;
    for e in &c.events {
        match e.tag() {
            EventTag::MessageSent => {
                seen_outbound = true;
                replies = 0;
            }
            EventTag::InboundEmail if seen_outbound => {
                replies += 1;
                if replies >= 2 {
                    return flag(true);
                }
            }
            _ => {}
        }
    }
    flag(false)
}
/// Mean over inbound emails; unknown when the debtor never wrote.
fn uppercase_ratio(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    let (n, sum) = emails(c).fold((0usize, 0.0), |(n, s), m| (n + 1, s + m.uppercase_ratio));
    (n > 0).then(|| sum / n as f64)
}
fn paid_after_fee_increase(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_after(c, EventTag::FeeIncreaseApplied, &[EventTag::PartialPayment, EventTag::FullPayment])
}
/// Unknown when no fee was charged.
fn claim_to_fee_ratio(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    (c.fee_amount > 0).then(|| c.main_claim_amount as f64 / c.fee_amount as f64)
}
fn pause_after_reduction(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_after(c, EventTag::DebtReductionOffered, &[EventTag::PaymentPauseTaken])
}
fn instalment_after_reduction(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_after(c, EventTag::DebtReductionOffered, &[EventTag::InstalmentPlanSigned])
}
fn paid_after_reduction(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_after(c, EventTag::DebtReductionOffered, &[EventTag::PartialPayment, EventTag::FullPayment])
}
fn instalment_without_extra_fees(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    before_any_fee_increase(c, EventTag::InstalmentPlanSigned)
}
fn pause_without_extra_fees(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    before_any_fee_increase(c, EventTag::PaymentPauseTaken)
}
fn paid_in_court_process(c: &DebtorCase, _: &ExtractionContext) -> Option<f64> {
    any_after(c, EventTag::CourtProcessInitiated, &[EventTag::FullPayment])
}

// ---------------------------------------------------------------------------
// registry

use CaseInput::*;
use EventTag as E;
use FeatureKind::{Boolean, Continuous};

const NONE_E: &[EventTag] = &[];
const NONE_A: &[&str] = &[];
const NONE_I: &[CaseInput] = &[];
const PAYMENTS: &[EventTag] = &[E::PartialPayment, E::FullPayment];

macro_rules! feature {
    ($id:ident, $kind:expr, $q:expr, $events:expr, $attrs:expr, $inputs:expr) => {
        FeatureDef {
            id: stringify!($id),
            question: $q,
            kind: $kind,
            events: $events,
            attrs: $attrs,
            inputs: $inputs,
            extract: $id,
        }
    };
}

pub static REGISTRY: &[FeatureDef] = &[
    feature!(asked_instalment_via_email, Boolean, "Did the debtor ask for an instalment plan via email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(asked_pause_via_email, Boolean, "Did the debtor ask for a payment pause via email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(promised_payment_date, Boolean, "Did the debtor commit to paying on a specific date?", &[E::PromiseToPayMade], NONE_A, NONE_I),
    feature!(requested_instalment_plan, Boolean, "Did the debtor request an instalment plan?", &[E::InstalmentPlanRequested], NONE_A, NONE_I),
    feature!(payment_solution_taken, Boolean, "Was any payment solution taken?", &[E::InstalmentPlanSigned, E::PaymentPauseTaken], NONE_A, NONE_I),
    feature!(signed_instalment_plan, Boolean, "Did the debtor request and sign an instalment plan?", &[E::InstalmentPlanSigned], NONE_A, NONE_I),
    feature!(partial_payment_within_60d, Boolean, "Partial payment within 60 days?", &[E::PartialPayment], NONE_A, &[OpenedAt]),
    feature!(payment_page_visited, Boolean, "Was the payment page visited?", &[E::PaymentPageVisit], NONE_A, NONE_I),
    feature!(debt_counseling, Boolean, "Is debt counseling involved?", &[E::DebtCounselingInvolved], NONE_A, NONE_I),
    feature!(name_in_email, Boolean, "Is the debtor's name part of the email address?", NONE_E, &[attr::NAME_IN_EMAIL], NONE_I),
    feature!(fraudulent_case, Boolean, "Is it a fraudulent case file?", NONE_E, &[attr::FRAUDULENT], NONE_I),
    feature!(debt_age_days, Continuous, "How old is the debt (days)?", &[E::FullPayment], NONE_A, &[OpenedAt]),
    feature!(any_reaction, Boolean, "Was any reaction observed?", &EventTag::REACTIONS, NONE_A, NONE_I),
    feature!(days_to_first_reaction, Continuous, "Days until the first reaction", &EventTag::REACTIONS, NONE_A, &[OpenedAt]),
    feature!(debt_disputed, Boolean, "Was the debt disputed?", &[E::DisputeRaised], NONE_A, NONE_I),
    feature!(name_valid, Boolean, "Is the debtor's name valid?", NONE_E, &[attr::NAME_VALID], NONE_I),
    feature!(email_valid, Boolean, "Is the email address valid?", NONE_E, &[attr::EMAIL_VALID], NONE_I),
    feature!(address_valid, Boolean, "Is the postal address valid?", NONE_E, &[attr::ADDRESS_VALID], NONE_I),
    feature!(court_process, Boolean, "Was a court process initiated?", &[E::CourtProcessInitiated], NONE_A, NONE_I),
    feature!(multiple_solutions, Boolean, "Was more than one payment solution chosen?", &[E::InstalmentPlanSigned, E::PaymentPauseTaken], NONE_A, NONE_I),
    feature!(direct_debit, Boolean, "Did the debtor pay via direct debit?", PAYMENTS, NONE_A, NONE_I),
    feature!(pair_score, Continuous, "Internal score", NONE_E, &[attr::PAIR_SCORE], NONE_I),
    feature!(pair_score_high, Boolean, "Internal score above threshold?", NONE_E, &[attr::PAIR_SCORE], NONE_I),
    feature!(claim_to_rent_ratio, Continuous, "Open claim relative to regional rent price", NONE_E, &[attr::REGIONAL_RENT_PRICE], &[MainClaim]),
    feature!(schufa_score, Continuous, "Credit bureau score", NONE_E, &[attr::SCHUFA_SCORE], NONE_I),
    feature!(schufa_score_high, Boolean, "Credit bureau score above threshold?", NONE_E, &[attr::SCHUFA_SCORE], NONE_I),
    feature!(debt_paid, Boolean, "Was the debt paid?", &[E::FullPayment], NONE_A, NONE_I),
    feature!(deceased_or_imprisoned, Boolean, "Has the debtor died or is in prison?", NONE_E, &[attr::DECEASED_OR_IMPRISONED], NONE_I),
    feature!(insolvency_initiated, Boolean, "Did the debtor initiate insolvency?", &[E::InsolvencyInitiated], NONE_A, NONE_I),
    feature!(multiple_devices, Boolean, "Was more than one device used?", NONE_E, &[attr::DEVICE_COUNT], NONE_I),
    feature!(apple_device, Boolean, "Was an Apple device used?", NONE_E, &[attr::APPLE_DEVICE], NONE_I),
    feature!(regional_rent_price, Continuous, "Regional rent price", NONE_E, &[attr::REGIONAL_RENT_PRICE], NONE_I),
    feature!(regional_unemployment_ratio, Continuous, "Regional unemployment ratio", NONE_E, &[attr::REGIONAL_UNEMPLOYMENT_RATIO], NONE_I),
    feature!(regional_disposable_income, Continuous, "Regional disposable income", NONE_E, &[attr::REGIONAL_DISPOSABLE_INCOME], NONE_I),
    feature!(main_claim_amount, Continuous, "Size of the main claim (euros)", NONE_E, NONE_A, &[MainClaim]),
    feature!(recurrent_debtor, Boolean, "Is the debtor recurrent?", NONE_E, &[attr::RECURRENT_DEBTOR], NONE_I),
    feature!(kept_payment_promise, Boolean, "Did the debtor keep a promise to pay?", &[E::PromiseToPayKept, E::PromiseToPayBroken], NONE_A, NONE_I),
    feature!(kept_instalment_schedule, Boolean, "Did the debtor stick to the instalment schedule?", &[E::InstalmentPlanSigned, E::InstalmentLate, E::InstalmentPlanCancelled], NONE_A, NONE_I),
    feature!(instalment_late, Boolean, "Was an instalment ever late?", &[E::InstalmentLate], NONE_A, NONE_I),
    feature!(instalment_plan_cancelled, Boolean, "Was an instalment plan cancelled?", &[E::InstalmentPlanCancelled], NONE_A, NONE_I),
    feature!(days_to_sign_instalment_plan, Continuous, "Days from requesting to signing an instalment plan", &[E::InstalmentPlanRequested, E::InstalmentPlanSigned], NONE_A, NONE_I),
    feature!(returned_item_late, Boolean, "Did the case start from a late return?", NONE_E, &[attr::RETURNED_ITEM_LATE], NONE_I),
    feature!(paid_creditor_directly, Boolean, "Did the debtor pay the creditor directly?", PAYMENTS, NONE_A, NONE_I),
    feature!(other_collection_case, Boolean, "Was there another collection case for this debtor?", NONE_E, &[attr::OTHER_COLLECTION_CASE], NONE_I),
    feature!(payment_attempt_expired, Boolean, "Has a payment attempt expired?", &[E::PaymentAttemptExpired], NONE_A, NONE_I),
    feature!(email_attachments, Boolean, "Did the debtor attach files to emails?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(insulting_language, Boolean, "Insulting language in an email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(repeated_punctuation, Boolean, "Repeated punctuation in an email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(formal_greeting, Boolean, "Formal greeting and ending in an email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(email_length_extreme, Boolean, "An email under 20 or over 100 words?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(emoji_used, Boolean, "Emojis in an email?", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(multiple_replies_to_one_email, Boolean, "Several emails in reply to one message?", &[E::InboundEmail, E::MessageSent], NONE_A, NONE_I),
    feature!(uppercase_ratio, Continuous, "Mean uppercase share in emails", &[E::InboundEmail], NONE_A, NONE_I),
    feature!(paid_after_fee_increase, Boolean, "Payment after a fee increase?", &[E::FeeIncreaseApplied, E::PartialPayment, E::FullPayment], NONE_A, NONE_I),
    feature!(claim_to_fee_ratio, Continuous, "Main claim divided by collection fee", NONE_E, NONE_A, &[MainClaim, Fee]),
    feature!(pause_after_reduction, Boolean, "Payment pause after a debt reduction?", &[E::DebtReductionOffered, E::PaymentPauseTaken], NONE_A, NONE_I),
    feature!(instalment_after_reduction, Boolean, "Instalment plan after a debt reduction?", &[E::DebtReductionOffered, E::InstalmentPlanSigned], NONE_A, NONE_I),
    feature!(paid_after_reduction, Boolean, "Payment after a debt reduction?", &[E::DebtReductionOffered, E::PartialPayment, E::FullPayment], NONE_A, NONE_I),
    feature!(instalment_without_extra_fees, Boolean, "Instalment plan before any fee increase?", &[E::InstalmentPlanSigned, E::FeeIncreaseApplied], NONE_A, NONE_I),
    feature!(pause_without_extra_fees, Boolean, "Payment pause before any fee increase?", &[E::PaymentPauseTaken, E::FeeIncreaseApplied], NONE_A, NONE_I),
    feature!(paid_in_court_process, Boolean, "Full payment during a court process?", &[E::CourtProcessInitiated, E::FullPayment], NONE_A, NONE_I),
];

pub fn feature(id: &str) -> Option<&'static FeatureDef> {
    REGISTRY.iter().find(|f| f.id == id)
}

/// Event kinds that no feature reads.
pub fn auxiliary_events() -> BTreeSet<EventTag> {
    EventTag::ALL
        .into_iter()
        .filter(|t| !REGISTRY.iter().any(|f| f.depends_on(*t)))
        .collect()
}

/// Registry ids of the features that read `tag`.
pub fn dependents(tag: EventTag) -> BTreeSet<&'static str> {
    REGISTRY.iter().filter(|f| f.depends_on(tag)).map(|f| f.id).collect()
}

/// One value per entry of `table`, in table order.
pub fn extract_features(
    case: &DebtorCase,
    table: &WeightTable,
    ctx: &ExtractionContext,
) -> Result<FeatureVector> {
    let values = table
        .entries()
        .iter()
        .map(|(id, _)| {
            let def = feature(id).ok_or_else(|| Error::UnknownFeature {
                dimension: table.dimension().to_string(),
                feature: id.clone(),
            })?;
            Ok((id.clone(), def.extract(case, ctx)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        dimension: table.dimension(),
        values,
    })
}

/// Feature values for all four dimensions.
pub fn extract_all(
    case: &DebtorCase,
    tables: &BTreeMap<crate::scoring::Dimension, WeightTable>,
    ctx: &ExtractionContext,
) -> Result<Vec<FeatureVector>> {
    tables.values().map(|t| extract_features(case, t, ctx)).collect()
}
