//! Contextual Thompson sampling over message tonality and send time.

mod action;
mod thompson;

pub use action::{Action, Channel, TimeSlot, Tonality, ARMS, EMAIL_ARMS, LETTER_ARMS};
pub use thompson::{
    ArmStats, Outcome, PolicyConfig, PolicySnapshot, PolicyState, RewardMode, SharedPolicy,
    SNAPSHOT_FORMAT, SNAPSHOT_VERSION,
};
