//! Closed-loop experiments: choose messages, draw outcomes, learn.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::population::{generate_population, Debtor, PopulationSpec};
use super::rates::RateTable;
use super::trace::{TraceRecord, TraceSink};
use crate::error::{Error, Result};
use crate::policy::{Action, Channel, Outcome, PolicyConfig, PolicyState, Tonality, ARMS};
use crate::rng::{stream, Stream};
use crate::scoring::Typology;
use crate::stats::{CellCounts, OutcomeCounts};

pub const SECONDS_PER_ROUND: i64 = 86_400;
/// Letters have no controllable send time; they are stamped at this hour.
pub const LETTER_HOUR: u32 = 12;
/// Reactions arrive uniformly within this many seconds of the message.
pub const REACTION_WINDOW: i64 = 8 * 3_600;

/// How messages are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Bandit { policy: PolicyConfig },
    /// Every eligible arm equally likely, as in a randomized trial.
    UniformRandom,
    Fixed { action: Action },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rounds: u64,
    /// Every n-th round sends a letter instead of an email; 0 means never.
    #[serde(default)]
    pub letter_every: u64,
    pub schedule: ScheduleSpec,
}

fn sent_at(round: u64, action: Action) -> i64 {
    let hour = action.slot.map_or(LETTER_HOUR, |s| s.midpoint_hour());
    round as i64 * SECONDS_PER_ROUND + i64::from(hour) * 3_600
}

/// Outcome of one message in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageOutcome {
    /// Index into the population.
    pub debtor: usize,
    pub action: Action,
    pub sent_at: i64,
    pub reacted_at: Option<i64>,
    pub paid: bool,
}

impl MessageOutcome {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            reacted: self.reacted_at.is_some(),
            paid: self.paid,
        }
    }

    pub fn to_record(&self, round: u64, population: &[Debtor]) -> TraceRecord {
        let d = &population[self.debtor];
        TraceRecord {
            round,
            debtor_id: d.debtor_id.clone(),
            typology: d.typology,
            action: self.action,
            sent_at: self.sent_at,
            reacted: self.reacted_at.is_some(),
            reacted_at: self.reacted_at,
            paid: self.paid,
        }
    }
}

/// Send `actions[i]` to debtor `i` (or nothing for `None`) and draw outcomes.
/// A reaction arrives before the next round's earliest send time (08:00),
/// so the latest prior message is always this round's.
pub fn simulate_round<R: Rng + ?Sized>(
    population: &[Debtor],
    actions: &[Option<Action>],
    rates: &RateTable,
    round: u64,
    rng: &mut R,
) -> Result<Vec<MessageOutcome>> {
    if actions.len() != population.len() {
        return Err(Error::Invariant(format!(
            "{} actions for {} debtors",
            actions.len(),
            population.len()
        )));
    }
    let mut out = Vec::with_capacity(population.len());
    for (i, (d, a)) in population.iter().zip(actions).enumerate() {
        let Some(action) = *a else { continue };
        let p = rates.reaction(d.typology, action)?;
        let q = rates.payment(d.typology)?;
        out.push(draw(i, action, round, p, q, rng));
    }
    Ok(out)
}

fn draw<R: Rng + ?Sized>(debtor: usize, action: Action, round: u64, p: f64, q: f64, rng: &mut R) -> MessageOutcome {
    let sent = sent_at(round, action);
    let reacted = rng.random::<f64>() < p;
    let (reacted_at, paid) = if reacted {
        let delay = rng.random_range(0..REACTION_WINDOW);
        (Some(sent + delay), rng.random::<f64>() < q)
    } else {
        (None, false)
    };
    MessageOutcome {
        debtor,
        action,
        sent_at: sent,
        reacted_at,
        paid,
    }
}

/// Dense per-run lookup of rates for the typologies present.
struct RateGrid {
    p: Vec<[f64; ARMS]>,
    q: Vec<f64>,
}

impl RateGrid {
    fn new(rates: &RateTable, population: &[Debtor], channels: &[Channel]) -> Result<Self> {
        let mut p = vec![[f64::NAN; ARMS]; Typology::COUNT];
        let mut q = vec![f64::NAN; Typology::COUNT];
        let mut seen = [false; Typology::COUNT];
        for d in population {
            let ti = d.typology.index();
            if seen[ti] {
                continue;
            }
            seen[ti] = true;
            for &ch in channels {
                for a in Action::arms_for(ch) {
                    p[ti][a.arm_index()] = rates.reaction(d.typology, a)?;
                }
            }
            q[ti] = rates.payment(d.typology)?;
        }
        Ok(RateGrid { p, q })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseLevel {
    pub debtors: u64,
    /// Debtors with at least one reaction over the run.
    pub reacted: u64,
    pub paid: u64,
}

impl CaseLevel {
    pub fn reaction_rate(&self) -> Option<f64> {
        (self.debtors > 0).then(|| self.reacted as f64 / self.debtors as f64)
    }

    pub fn payment_rate(&self) -> Option<f64> {
        (self.debtors > 0).then(|| self.paid as f64 / self.debtors as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub rounds: u64,
    pub debtors: u64,
    pub messages: u64,
    /// First round of the final 20% window.
    pub final_window_start: u64,
    pub counts: OutcomeCounts,
    pub final_window: OutcomeCounts,
    pub case_level: BTreeMap<Typology, CaseLevel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyState>,
}

/// First round of the last fifth of a run.
pub fn final_window_start(rounds: u64) -> u64 {
    rounds - rounds / 5
}

/// Run `config.rounds` rounds. Each round every debtor receives one message;
/// all selections in a round see the policy as it was at the start of the
/// round, then the round's outcomes are applied in debtor order.
///
/// Randomness comes from `seed` through separate streams for the population,
/// the schedule and the outcomes. `initial` resumes a bandit from a saved state.
pub fn run_experiment(
    population_spec: &PopulationSpec,
    rates: &RateTable,
    config: &ExperimentConfig,
    seed: u64,
    initial: Option<PolicyState>,
    sink: &mut dyn TraceSink,
) -> Result<ExperimentSummary> {
    let mut pop_rng = stream(population_spec.seed.unwrap_or(seed), Stream::Population);
    let population = generate_population(population_spec, &mut pop_rng)?;
    run_on_population(&population, rates, config, seed, initial, sink)
}

/// As [`run_experiment`] with a given population.
pub fn run_on_population(
    population: &[Debtor],
    rates: &RateTable,
    config: &ExperimentConfig,
    seed: u64,
    initial: Option<PolicyState>,
    sink: &mut dyn TraceSink,
) -> Result<ExperimentSummary> {
    let mut policy_rng = stream(seed, Stream::Policy);
    let mut outcome_rng = stream(seed, Stream::Outcomes);

    let channels: Vec<Channel> = if config.letter_every > 0 {
        vec![Channel::Email, Channel::Letter]
    } else {
        vec![Channel::Email]
    };
    let grid = RateGrid::new(rates, population, &channels)?;

    let mut policy = match (&config.schedule, initial) {
        (ScheduleSpec::Bandit { .. }, Some(state)) => Some(state),
        (ScheduleSpec::Bandit { policy }, None) => Some(PolicyState::new(PolicyConfig {
            seed,
            ..policy.clone()
        })?),
        (_, Some(_)) => {
            return Err(Error::Config("an initial policy state needs the bandit schedule".into()))
        }
        (_, None) => None,
    };
    if let ScheduleSpec::Fixed { action } = &config.schedule {
        if config.letter_every > 0 {
            return Err(Error::Config("a fixed schedule cannot alternate channels".into()));
        }
        if action.channel() != Channel::Email {
            return Err(Error::Config(format!("fixed schedule action {action} is not an email arm")));
        }
    }

    let mut counts = OutcomeCounts::new();
    let mut final_window = OutcomeCounts::new();
    let mut reacted = vec![false; population.len()];
    let mut paid = vec![false; population.len()];
    let start = final_window_start(config.rounds);
    let record = sink.enabled();
    let mut actions = vec![None; population.len()];
    let mut messages = 0u64;

    for round in 0..config.rounds {
        let channel = if config.letter_every > 0 && (round + 1) % config.letter_every == 0 {
            Channel::Letter
        } else {
            Channel::Email
        };
        for (slot, d) in actions.iter_mut().zip(population) {
            let a = match (&config.schedule, &policy) {
                (ScheduleSpec::Bandit { .. }, Some(state)) => {
                    state.select_action(d.typology, channel, None, &mut policy_rng)?
                }
                (ScheduleSpec::UniformRandom, _) => {
                    let arms = Action::arms_for(channel);
                    arms[policy_rng.random_range(0..arms.len())]
                }
                (ScheduleSpec::Fixed { action }, _) => *action,
                (ScheduleSpec::Bandit { .. }, None) => unreachable!("bandit state built above"),
            };
            *slot = Some(a);
        }
        for (i, a) in actions.iter().enumerate() {
            let Some(action) = *a else { continue };
            let d = &population[i];
            let ti = d.typology.index();
            let m = draw(i, action, round, grid.p[ti][action.arm_index()], grid.q[ti], &mut outcome_rng);
            let o = m.outcome();
            counts.record(d.typology, action, o.reacted, o.paid);
            if round >= start {
                final_window.record(d.typology, action, o.reacted, o.paid);
            }
            reacted[i] |= o.reacted;
            paid[i] |= o.paid;
            if let Some(state) = policy.as_mut() {
                state.observe(d.typology, action, o)?;
            }
            if record {
                sink.record(&m.to_record(round, population))?;
            }
            messages += 1;
        }
    }

    let mut case_level: BTreeMap<Typology, CaseLevel> = BTreeMap::new();
    for (i, d) in population.iter().enumerate() {
        let c = case_level.entry(d.typology).or_default();
        c.debtors += 1;
        c.reacted += u64::from(reacted[i]);
        c.paid += u64::from(paid[i]);
    }

    Ok(ExperimentSummary {
        rounds: config.rounds,
        debtors: population.len() as u64,
        messages,
        final_window_start: start,
        counts,
        final_window,
        case_level,
        policy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestAction {
    pub action: Action,
    pub tonality: Tonality,
    /// `final_window_pulls` or `empirical_rate`.
    pub basis: String,
    pub pulls: u64,
    pub rate: f64,
}

fn rate(c: CellCounts) -> f64 {
    if c.exposures == 0 {
        0.0
    } else {
        c.reactions as f64 / c.exposures as f64
    }
}

/// Per typology: the most-pulled arm in the final window for bandit runs,
/// otherwise the arm with the highest observed reaction rate. Ties go to the
/// lower arm index.
pub fn best_actions(summary: &ExperimentSummary) -> BTreeMap<Typology, BestAction> {
    let bandit = summary.policy.is_some();
    let mut out = BTreeMap::new();
    for t in Typology::all() {
        let source = if bandit { &summary.final_window } else { &summary.counts };
        let mut best: Option<(Action, CellCounts)> = None;
        for (ty, a, c) in source.iter() {
            if ty != t {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, b)) if bandit => c.exposures > b.exposures,
                Some((_, b)) => rate(c) > rate(b),
            };
            if better {
                best = Some((a, c));
            }
        }
        if let Some((a, c)) = best {
            out.insert(
                t,
                BestAction {
                    action: a,
                    tonality: a.tonality,
                    basis: if bandit { "final_window_pulls" } else { "empirical_rate" }.to_string(),
                    pulls: c.exposures,
                    rate: rate(c),
                },
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TimeSlot;
    use crate::simulator::NullSink;

    fn ty(s: &str) -> Typology {
        s.parse().unwrap()
    }

    #[test]
    fn zero_rounds_empty() {
        let mut trace = Vec::new();
        let cfg = ExperimentConfig {
            rounds: 0,
            letter_every: 0,
            schedule: ScheduleSpec::UniformRandom,
        };
        let s = run_experiment(&PopulationSpec::default(), &RateTable::default(), &cfg, 1, None, &mut trace).unwrap();
        assert!(trace.is_empty());
        assert_eq!(s.messages, 0);
        assert!(s.counts.is_empty());
    }

    #[test]
    fn zero_probability_gives_no_reactions() {
        let mut rates = RateTable::default().to_toml_string();
        rates = rates.replace("\"hard@08:00\" = 0.022", "\"hard@08:00\" = 0.0");
        let rates = RateTable::from_toml_str(&rates, "t").unwrap();
        let cfg = ExperimentConfig {
            rounds: 50,
            letter_every: 0,
            schedule: ScheduleSpec::Fixed {
                action: Action::email(Tonality::Hard, TimeSlot::T0800),
            },
        };
        let s = run_experiment(&PopulationSpec::point_mass(ty("DICE"), 200), &rates, &cfg, 5, None, &mut NullSink)
            .unwrap();
        assert_eq!(s.counts.total().exposures, 10_000);
        assert_eq!(s.counts.total().reactions, 0);
    }

    #[test]
    fn reactions_stay_inside_their_round() {
        let mut trace = Vec::new();
        let cfg = ExperimentConfig {
            rounds: 30,
            letter_every: 3,
            schedule: ScheduleSpec::UniformRandom,
        };
        run_experiment(&PopulationSpec::default(), &RateTable::default(), &cfg, 9, None, &mut trace).unwrap();
        for r in &trace {
            if let Some(at) = r.reacted_at {
                assert!(at >= r.sent_at);
                // before the earliest possible message of the next round
                assert!(at < (r.round as i64 + 1) * SECONDS_PER_ROUND + 8 * 3_600);
            }
            assert_eq!(r.action.channel() == Channel::Letter, (r.round + 1) % 3 == 0);
        }
    }

    #[test]
    fn missing_cell_fails_before_running() {
        let text = "[reaction.WACE]\n\"hard@08:00\" = 0.2\n[payment]\nWACE = 0.5\n";
        let rates = RateTable::from_toml_str(text, "t").unwrap();
        let cfg = ExperimentConfig {
            rounds: 1,
            letter_every: 0,
            schedule: ScheduleSpec::UniformRandom,
        };
        let r = run_experiment(&PopulationSpec::point_mass(ty("WACE"), 3), &rates, &cfg, 1, None, &mut NullSink);
        assert!(matches!(r, Err(Error::MissingRateCell(_))));
    }

    #[test]
    fn simulate_round_respects_none() {
        let pop = vec![
            Debtor { debtor_id: "a".into(), typology: ty("WAOR") },
            Debtor { debtor_id: "b".into(), typology: ty("WAOR") },
        ];
        let mut rng = stream(1, Stream::Outcomes);
        let acts = [None, Some(Action::letter(Tonality::Hard))];
        let out = simulate_round(&pop, &acts, &RateTable::default(), 4, &mut rng).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].debtor, 1);
        assert_eq!(out[0].sent_at, 4 * SECONDS_PER_ROUND + 12 * 3600);
        assert!(simulate_round(&pop, &acts[..1], &RateTable::default(), 0, &mut rng).is_err());
    }
}
