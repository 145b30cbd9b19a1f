use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::action::{Action, Channel, ARMS};
use crate::error::{Error, Result};
use crate::scoring::Typology;

pub const SNAPSHOT_FORMAT: &str = "debtor-strategy/policy";
pub const SNAPSHOT_VERSION: u32 = 1;

/// What counts as a success when updating the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Reaction,
    Payment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Outcome {
    pub reacted: bool,
    pub paid: bool,
}

impl Outcome {
    pub fn reward(self, mode: RewardMode) -> bool {
        match mode {
            RewardMode::Reaction => self.reacted,
            RewardMode::Payment => self.paid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Probability of a uniformly random eligible arm.
    pub epsilon: f64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub reward: RewardMode,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            epsilon: 0.05,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            reward: RewardMode::Reaction,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(self.prior_alpha > 0.0 && self.prior_alpha.is_finite())
            || !(self.prior_beta > 0.0 && self.prior_beta.is_finite())
        {
            return Err(Error::Config(format!(
                "priors must be positive and finite (alpha={}, beta={})",
                self.prior_alpha, self.prior_beta
            )));
        }
        Ok(())
    }
}

/// Observed successes and failures of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArmStats {
    pub successes: u64,
    pub failures: u64,
}

impl ArmStats {
    pub fn pulls(self) -> u64 {
        self.successes + self.failures
    }
}

/// Beta-Bernoulli posteriors per (typology, arm).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    config: PolicyConfig,
    arms: BTreeMap<Typology, [ArmStats; ARMS]>,
}

impl PolicyState {
    pub fn new(config: PolicyConfig) -> Result<Self> {
        config.validate()?;
        let arms = Typology::all()
            .into_iter()
            .map(|t| (t, [ArmStats::default(); ARMS]))
            .collect();
        Ok(PolicyState { config, arms })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    fn context(&self, typology: Typology) -> Result<&[ArmStats; ARMS]> {
        self.arms
            .get(&typology)
            .ok_or_else(|| Error::UnknownTypology(typology.label()))
    }

    pub fn stats(&self, typology: Typology, action: Action) -> Result<ArmStats> {
        Ok(self.context(typology)?[action.arm_index()])
    }

    /// Posterior parameters (alpha, beta).
    pub fn posterior(&self, typology: Typology, action: Action) -> Result<(f64, f64)> {
        let s = self.stats(typology, action)?;
        Ok((
            self.config.prior_alpha + s.successes as f64,
            self.config.prior_beta + s.failures as f64,
        ))
    }

    pub fn posterior_mean(&self, typology: Typology, action: Action) -> Result<f64> {
        let (a, b) = self.posterior(typology, action)?;
        Ok(a / (a + b))
    }

    /// Overwrite an arm's counts, e.g. to seed a state from historical data.
    pub fn set_stats(&mut self, typology: Typology, action: Action, stats: ArmStats) -> Result<()> {
        let ctx = self
            .arms
            .get_mut(&typology)
            .ok_or_else(|| Error::UnknownTypology(typology.label()))?;
        ctx[action.arm_index()] = stats;
        Ok(())
    }

    pub fn total_pulls(&self, typology: Typology) -> Result<u64> {
        Ok(self.context(typology)?.iter().map(|s| s.pulls()).sum())
    }

    /// Choose an action for a debtor of `typology`.
    ///
    /// With probability epsilon the action is uniform over the eligible set;
    /// otherwise every eligible arm draws from its Beta posterior and the
    /// largest draw wins (first arm on ties). `eligible` restricts the arms
    /// for business rules and is intersected with the channel's arms.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        typology: Typology,
        channel: Channel,
        eligible: Option<&[Action]>,
        rng: &mut R,
    ) -> Result<Action> {
        let ctx = self.context(typology)?;
        let candidates: Vec<Action> = match eligible {
            Some(allowed) => Action::arms_for(channel)
                .into_iter()
                .filter(|a| allowed.contains(a))
                .collect(),
            None => Action::arms_for(channel),
        };
        if candidates.is_empty() {
            return Err(Error::NoEligibleAction(typology.label()));
        }
        let explore: f64 = rng.random();
        if explore < self.config.epsilon {
            return Ok(candidates[rng.random_range(0..candidates.len())]);
        }
        let mut best = (f64::NEG_INFINITY, candidates[0]);
        for action in candidates {
            let s = ctx[action.arm_index()];
            let beta = Beta::new(
                self.config.prior_alpha + s.successes as f64,
                self.config.prior_beta + s.failures as f64,
            )
            .map_err(|e| Error::Invariant(format!("beta posterior: {e}")))?;
            let draw = beta.sample(rng);
            if draw > best.0 {
                best = (draw, action);
            }
        }
        Ok(best.1)
    }

    /// Record one binary reward. Only the named cell changes.
    pub fn update(&mut self, typology: Typology, action: Action, success: bool) -> Result<()> {
        let ctx = self
            .arms
            .get_mut(&typology)
            .ok_or_else(|| Error::UnknownTypology(typology.label()))?;
        let cell = &mut ctx[action.arm_index()];
        if success {
            cell.successes += 1;
        } else {
            cell.failures += 1;
        }
        Ok(())
    }

    /// Update using the configured reward mode.
    pub fn observe(&mut self, typology: Typology, action: Action, outcome: Outcome) -> Result<()> {
        self.update(typology, action, outcome.reward(self.config.reward))
    }

    /// Arm with the highest posterior mean among `channel`'s arms.
    pub fn best_action(&self, typology: Typology, channel: Channel) -> Result<Action> {
        let mut best: Option<(f64, Action)> = None;
        for a in Action::arms_for(channel) {
            let m = self.posterior_mean(typology, a)?;
            if best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, a));
            }
        }
        Ok(best.expect("channels have arms").1)
    }
}

// ---------------------------------------------------------------------------
// snapshot format

#[derive(Serialize, Deserialize)]
struct ArmRepr {
    successes: u64,
    failures: u64,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    format: String,
    version: u32,
    config: PolicyConfig,
    /// typology -> action key -> counts
    arms: BTreeMap<Typology, BTreeMap<String, ArmRepr>>,
}

impl Serialize for PolicyState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let arms = self
            .arms
            .iter()
            .map(|(t, cells)| {
                let per_arm = cells
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let key = Action::from_arm_index(i).expect("dense index").key();
                        (key, ArmRepr { successes: s.successes, failures: s.failures })
                    })
                    .collect();
                (*t, per_arm)
            })
            .collect();
        StateRepr {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            arms,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolicyState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = StateRepr::deserialize(deserializer)?;
        if repr.format != SNAPSHOT_FORMAT {
            return Err(D::Error::custom(format!("not a policy snapshot (format `{}`)", repr.format)));
        }
        if repr.version != SNAPSHOT_VERSION {
            return Err(D::Error::custom(format!("unsupported snapshot version {}", repr.version)));
        }
        repr.config.validate().map_err(D::Error::custom)?;
        let mut state = PolicyState::new(repr.config).map_err(D::Error::custom)?;
        if repr.arms.len() != Typology::COUNT {
            return Err(D::Error::custom(format!(
                "snapshot covers {} typologies, expected {}",
                repr.arms.len(),
                Typology::COUNT
            )));
        }
        for (t, cells) in repr.arms {
            if cells.len() != ARMS {
                return Err(D::Error::custom(format!("{t}: {} arms, expected {ARMS}", cells.len())));
            }
            for (key, c) in cells {
                let action: Action = key.parse().map_err(D::Error::custom)?;
                state
                    .set_stats(t, action, ArmStats { successes: c.successes, failures: c.failures })
                    .map_err(D::Error::custom)?;
            }
        }
        Ok(state)
    }
}

/// A policy together with its random stream, for pause/resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub state: PolicyState,
    pub rng: ChaCha8Rng,
}

impl PolicySnapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("policy snapshot: {e}")))
    }
}

/// Thread-safe handle. Selections see a complete state: updates take the
/// write lock, selections the read lock.
#[derive(Debug, Clone)]
pub struct SharedPolicy {
    inner: Arc<RwLock<PolicyState>>,
}

impl SharedPolicy {
    pub fn new(state: PolicyState) -> Self {
        SharedPolicy {
            inner: Arc::new(RwLock::new(state)),
        }
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        typology: Typology,
        channel: Channel,
        eligible: Option<&[Action]>,
        rng: &mut R,
    ) -> Result<Action> {
        self.read()?.select_action(typology, channel, eligible, rng)
    }

    pub fn update(&self, typology: Typology, action: Action, success: bool) -> Result<()> {
        self.inner
            .write()
            .map_err(|_| Error::Invariant("policy lock poisoned".into()))?
            .update(typology, action, success)
    }

    pub fn snapshot(&self) -> Result<PolicyState> {
        Ok(self.read()?.clone())
    }

    fn read(&self) -> Result<std::sync::RwLockReadGuard<'_, PolicyState>> {
        self.inner
            .read()
            .map_err(|_| Error::Invariant("policy lock poisoned".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{TimeSlot, Tonality};
    use rand::SeedableRng;

    fn typ(s: &str) -> Typology {
        s.parse().unwrap()
    }

    fn state(epsilon: f64) -> PolicyState {
        PolicyState::new(PolicyConfig {
            epsilon,
            ..PolicyConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn update_increments_one_cell() {
        let mut s = state(0.05);
        let a = Action::email(Tonality::Hard, TimeSlot::T1600);
        s.update(typ("DICE"), a, true).unwrap();
        assert_eq!(s.posterior(typ("DICE"), a).unwrap(), (2.0, 1.0));
        s.update(typ("DICE"), a, false).unwrap();
        assert_eq!(s.posterior(typ("DICE"), a).unwrap(), (2.0, 2.0));
        let before = state(0.05);
        for t in Typology::all() {
            for i in 0..ARMS {
                let b = Action::from_arm_index(i).unwrap();
                if t == typ("DICE") && b == a {
                    continue;
                }
                assert_eq!(s.stats(t, b).unwrap(), before.stats(t, b).unwrap());
            }
        }
        assert_eq!(s.total_pulls(typ("DICE")).unwrap(), 2);
    }

    #[test]
    fn letters_get_tonality_only_arms() {
        let s = state(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let a = s.select_action(typ("WAOR"), Channel::Letter, None, &mut rng).unwrap();
            assert!(a.slot.is_none());
            let e = s.select_action(typ("WAOR"), Channel::Email, None, &mut rng).unwrap();
            assert!(e.slot.is_some());
        }
    }

    #[test]
    fn eligibility_filter_restricts() {
        let s = state(0.3);
        let allowed = [
            Action::email(Tonality::Cooperative, TimeSlot::T1200),
            Action::email(Tonality::Reciprocity, TimeSlot::T2000),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let a = s.select_action(typ("WACE"), Channel::Email, Some(&allowed), &mut rng).unwrap();
            assert!(allowed.contains(&a));
        }
        let letters_only = [Action::letter(Tonality::Hard)];
        assert!(matches!(
            s.select_action(typ("WACE"), Channel::Email, Some(&letters_only), &mut rng),
            Err(Error::NoEligibleAction(_))
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(PolicyState::new(PolicyConfig { epsilon: 1.5, ..Default::default() }).is_err());
        assert!(PolicyState::new(PolicyConfig { prior_alpha: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn snapshot_rejects_incomplete_state() {
        let s = state(0.05);
        let mut v: serde_json::Value = serde_json::to_value(&s).unwrap();
        v["arms"].as_object_mut().unwrap().remove("DICE");
        assert!(serde_json::from_value::<PolicyState>(v).is_err());
        let mut v: serde_json::Value = serde_json::to_value(&s).unwrap();
        v["version"] = 99.into();
        assert!(serde_json::from_value::<PolicyState>(v).is_err());
    }

    #[test]
    fn payment_reward_mode() {
        let mut s = PolicyState::new(PolicyConfig {
            reward: RewardMode::Payment,
            ..Default::default()
        })
        .unwrap();
        let a = Action::letter(Tonality::Informative);
        s.observe(typ("WIOR"), a, Outcome { reacted: true, paid: false }).unwrap();
        assert_eq!(s.stats(typ("WIOR"), a).unwrap(), ArmStats { successes: 0, failures: 1 });
    }

    #[test]
    fn shared_policy_updates_are_visible() {
        let shared = SharedPolicy::new(state(0.0));
        let a = Action::email(Tonality::Informative, TimeSlot::T0800);
        std::thread::scope(|scope| {
            for _ in 0..4 {
                let h = shared.clone();
                scope.spawn(move || {
                    for _ in 0..250 {
                        h.update(typ("DACR"), a, true).unwrap();
                    }
                });
            }
        });
        assert_eq!(shared.snapshot().unwrap().stats(typ("DACR"), a).unwrap().successes, 1000);
    }
}
