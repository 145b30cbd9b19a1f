#![allow(dead_code)]

use chrono::{Duration, TimeZone, Utc};
use debtor_strategy::case::{DebtorCase, EventKind, InboundEmail, PaymentMethod, StaticValue, Timestamp};
use debtor_strategy::policy::{Channel, TimeSlot, Tonality};
use debtor_strategy::scoring::{Dimension, Provenance, WeightSet, WeightTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn day(d: i64) -> Timestamp {
    Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).unwrap() + Duration::days(d)
}

/// A plausible case drawn from `seed`: random static attributes (some
/// missing) and a short event history.
pub fn random_case(seed: u64, index: usize) -> DebtorCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut c = DebtorCase::new(format!("C{index:05}"), format!("D{index:05}"), day(0))
        .with_amounts(rng.random_range(1_000..60_000), rng.random_range(0..4_000));
    let flags = ["email_valid", "name_valid", "address_valid", "apple_device", "recurrent_debtor", "name_in_email"];
    for f in flags {
        if rng.random_bool(0.9) {
            c = c.with_attr(f, StaticValue::Flag(rng.random_bool(0.5)));
        }
    }
    let numbers = [
        ("schufa_score", 60.0, 99.0),
        ("pair_score", 100.0, 900.0),
        ("regional_rent_price", 5.0, 20.0),
        ("regional_unemployment_ratio", 0.01, 0.15),
        ("regional_disposable_income", 15_000.0, 35_000.0),
        ("device_count", 0.0, 4.0),
    ];
    for (name, lo, hi) in numbers {
        if rng.random_bool(0.85) {
            c = c.with_attr(name, StaticValue::Number(rng.random_range(lo..hi)));
        }
    }
    let mut t = 0i64;
    for k in 0..rng.random_range(0..6) {
        t += rng.random_range(1..5);
        let tonality = Tonality::ALL[rng.random_range(0..5)];
        let (channel, slot) = if k == 3 {
            (Channel::Letter, None)
        } else {
            (Channel::Email, Some(TimeSlot::ALL[rng.random_range(0..4)]))
        };
        c = c.with_event(day(t), EventKind::MessageSent { tonality, channel, slot });
        let when = day(t) + Duration::hours(rng.random_range(1..20));
        match rng.random_range(0..8) {
            0 => c = c.with_event(when, EventKind::PaymentPageVisit),
            1 => {
                c = c.with_event(
                    when,
                    EventKind::InboundEmail(InboundEmail {
                        formal_greeting: rng.random_bool(0.5),
                        insult: rng.random_bool(0.1),
                        word_count: rng.random_range(3..300),
                        uppercase_ratio: rng.random_range(0.0..0.4),
                        requests_instalment_plan: rng.random_bool(0.2),
                        ..Default::default()
                    }),
                )
            }
            2 => c = c.with_event(when, EventKind::PromiseToPayMade),
            3 => c = c.with_event(when, EventKind::InstalmentPlanRequested),
            4 => {
                c = c.with_event(
                    when,
                    EventKind::PartialPayment {
                        amount: rng.random_range(100..2_000),
                        method: PaymentMethod::BankTransfer,
                    },
                )
            }
            _ => {}
        }
    }
    if rng.random_bool(0.4) {
        let amount = c.main_claim_amount + c.fee_amount;
        c = c.with_event(
            day(t + rng.random_range(1..20)),
            EventKind::FullPayment {
                amount,
                method: PaymentMethod::PaymentPage,
            },
        );
    }
    c
}

pub fn random_pool(seed: u64, n: usize) -> Vec<DebtorCase> {
    (0..n).map(|i| random_case(seed, i)).collect()
}

/// Weights with one binary attribute per dimension, so that debtors with
/// every flag combination land in distinct orthants.
pub fn orthant_weights() -> WeightSet {
    let table = |d, id: &str| WeightTable::new(d, vec![(id.to_string(), 1.0)], Provenance::User("test".into())).unwrap();
    WeightSet::from_tables([
        table(Dimension::Willingness, "name_valid"),
        table(Dimension::Ability, "apple_device"),
        table(Dimension::Organization, "email_valid"),
        table(Dimension::Rationality, "recurrent_debtor"),
    ])
    .unwrap()
}

pub const ORTHANT_ATTRS: [&str; 4] = ["name_valid", "apple_device", "email_valid", "recurrent_debtor"];

/// Sixteen cases, one per flag combination in dimension order.
pub fn orthant_pool() -> Vec<DebtorCase> {
    (0..16u8)
        .map(|bits| {
            let mut c = DebtorCase::new(format!("O{bits:02}"), format!("O{bits:02}"), day(0)).with_amounts(10_000, 500);
            for (k, name) in ORTHANT_ATTRS.iter().enumerate() {
                c = c.with_attr(name, StaticValue::Flag((bits >> (3 - k)) & 1 == 1));
            }
            c
        })
        .collect()
}
