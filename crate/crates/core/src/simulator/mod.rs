//! Synthetic debtors reacting to scheduled messages.

mod engine;
mod population;
mod rates;
mod trace;

pub use engine::{
    best_actions, final_window_start, run_experiment, run_on_population, simulate_round, BestAction, CaseLevel,
    ExperimentConfig, ExperimentSummary, MessageOutcome, ScheduleSpec, LETTER_HOUR, REACTION_WINDOW,
    SECONDS_PER_ROUND,
};
pub use population::{debtor_id, generate_population, Debtor, PopulationSpec, DEFAULT_DEBTORS, NAMED_SHARES};
pub use rates::{per_message_rate, CaseTargets, CellSource, RateCell, RateTable, ASSUMED_MESSAGES_PER_CASE};
pub use trace::{attribute, read_trace, JsonlSink, NullSink, TraceRecord, TraceSink};
