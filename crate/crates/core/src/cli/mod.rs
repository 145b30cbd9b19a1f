//! Command-line front end.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::case::{ingest_path, ExtractionContext};
use crate::error::{Error, ErrorClass, Result};
use crate::policy::{
    Action, Channel, Outcome, PolicyConfig, PolicySnapshot, PolicyState, RewardMode,
};
use crate::report::{
    execute, execute_analyze, execute_score, execute_simulate, file_sha256, read_header, write_artifacts,
    AnalyzeConfig, LogFormat, RunConfig, RunOutput, ScoreConfig, ScoreMode, SimulateConfig, OUT_DIR_ENV,
};
use crate::scoring::{ReferenceStats, Typology, WeightSet};
use crate::simulator::{ExperimentConfig, PopulationSpec, RateTable, ScheduleSpec};

// Like println!, but a closed stdout is not a panic.
macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_INPUT: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "debtor-strategy", version, about = "Debtor typology scoring and reminder strategy experiments")]
pub struct Cli {
    /// Directory for reports and other output files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score case records and assign typologies.
    Score(ScoreArgs),
    /// Classify normalized scores, or new cases against reference statistics.
    Classify(ClassifyArgs),
    /// Run a simulated experiment.
    Simulate(SimulateArgs),
    /// Rate tables and chi-square tests for a trace or case log.
    Analyze(AnalyzeArgs),
    /// Step a persisted bandit policy one decision at a time.
    BanditRun(BanditRunArgs),
    /// Check configuration files without running anything.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PoolRelative,
    Frozen,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Line-delimited case records.
    #[arg(long, required_unless_present = "replay")]
    pub cases: Option<PathBuf>,
    /// Weight tables (TOML); the shipped tables if omitted.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pool-relative")]
    pub mode: ModeArg,
    /// Reference statistics for frozen mode.
    #[arg(long, required_if_eq("mode", "frozen"))]
    pub reference: Option<PathBuf>,
    /// Write the fitted reference statistics (pool mode).
    #[arg(long)]
    pub save_reference: Option<PathBuf>,
    /// Observation window after case opening, in days.
    #[arg(long)]
    pub window_days: Option<f64>,
    /// Re-run from a report's provenance header.
    #[arg(long, conflicts_with_all = ["cases", "weights", "reference"])]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Four normalized scores: willingness,ability,organization,rationality.
    #[arg(long, value_delimiter = ',', conflicts_with = "cases")]
    pub scores: Option<Vec<f64>>,
    /// Case records to classify in frozen mode.
    #[arg(long, requires = "reference")]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Bandit,
    Uniform,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RewardArg {
    Reaction,
    Payment,
}

impl From<RewardArg> for RewardMode {
    fn from(r: RewardArg) -> Self {
        match r {
            RewardArg::Reaction => RewardMode::Reaction,
            RewardArg::Payment => RewardMode::Payment,
        }
    }
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Probability of a uniformly random arm.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_beta: f64,
    #[arg(long, value_enum, default_value = "reaction")]
    pub reward: RewardArg,
}

impl PolicyArgs {
    fn config(&self, seed: u64) -> PolicyConfig {
        PolicyConfig {
            epsilon: self.epsilon,
            prior_alpha: self.prior_alpha,
            prior_beta: self.prior_beta,
            reward: self.reward.into(),
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Population spec (TOML); the default mix if omitted.
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Overrides the population size.
    #[arg(long)]
    pub debtors: Option<u64>,
    /// Rate table (TOML); the shipped table if omitted.
    #[arg(long)]
    pub rates: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "bandit")]
    pub schedule: ScheduleArg,
    /// Action for the fixed schedule, e.g. `cooperative@12:00`.
    #[arg(long, required_if_eq("schedule", "fixed"))]
    pub action: Option<String>,
    /// Send a letter every n-th round.
    #[arg(long, default_value_t = 0)]
    pub letter_every: u64,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Start the bandit from a saved policy state.
    #[arg(long)]
    pub policy_state: Option<PathBuf>,
    /// Independent runs with derived seeds.
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    /// Write the message-level trace.
    #[arg(long)]
    pub trace: bool,
    /// Re-run from a report's provenance header.
    #[arg(long, conflicts_with_all = ["population", "rates", "policy_state"])]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Trace,
    Cases,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trace or case log.
    #[arg(long, required_unless_present = "replay")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "trace")]
    pub format: FormatArg,
    /// Weights for scoring a case log.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Re-run from a report's provenance header.
    #[arg(long, conflicts_with_all = ["input", "weights"])]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BanditRunArgs {
    /// Policy snapshot file.
    #[arg(long)]
    pub snapshot: PathBuf,
    #[command(subcommand)]
    pub step: BanditStep,
}

#[derive(Debug, Subcommand)]
pub enum BanditStep {
    /// Create a fresh snapshot.
    Init {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace an existing snapshot.
        #[arg(long)]
        force: bool,
    },
    /// Choose an action and advance the stored random stream.
    Select {
        #[arg(long)]
        typology: String,
        #[arg(long, default_value = "email")]
        channel: String,
        /// Comma-separated eligible actions.
        #[arg(long, value_delimiter = ',')]
        eligible: Option<Vec<String>>,
    },
    /// Record the outcome of an action.
    Update {
        #[arg(long)]
        typology: String,
        #[arg(long)]
        action: String,
        #[arg(long)]
        reacted: bool,
        #[arg(long)]
        paid: bool,
    },
    /// Print posterior means per arm for one typology.
    Show {
        #[arg(long)]
        typology: String,
    },
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("files").required(true).multiple(true)
    .args(["weights", "rates", "population", "policy", "reference", "report"])))]
pub struct ValidateArgs {
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub rates: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Policy state or snapshot.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Report whose header should be checked.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn weights_or_default(path: Option<&Path>) -> Result<WeightSet> {
    path.map_or_else(|| Ok(WeightSet::default_tables()), WeightSet::load)
}

fn load_reference(path: &Path) -> Result<ReferenceStats> {
    ReferenceStats::from_json(&read(path)?)
}

fn load_policy_state(path: &Path) -> Result<PolicyState> {
    let text = read(path)?;
    serde_json::from_str::<PolicyState>(&text)
        .or_else(|_| PolicySnapshot::from_json(&text).map(|s| s.state))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn replay_config(path: &Path, command: &str) -> Result<(RunConfig, Option<u64>)> {
    let (cfg, seed) = read_header(&read(path)?)?;
    if cfg.command() != command {
        return Err(Error::Input(format!(
            "{} is a {} report, not {command}",
            path.display(),
            cfg.command()
        )));
    }
    Ok((cfg, seed))
}

fn finish(out_dir: &Path, out: RunOutput) -> Result<()> {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let written = write_artifacts(out_dir, &out.artifacts)?;
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", out.summary);
    if !out.summary.ends_with('\n') && !out.summary.is_empty() {
        let _ = writeln!(stdout);
    }
    for p in written {
        let _ = writeln!(stdout, "wrote {}", p.display());
    }
    Ok(())
}

fn cmd_score(a: &ScoreArgs, out_dir: &Path) -> Result<()> {
    if let Some(r) = &a.replay {
        let (cfg, seed) = replay_config(r, "score")?;
        return finish(out_dir, execute(&cfg, seed)?);
    }
    let cases = a.cases.clone().expect("clap requires --cases");
    let mut context = ExtractionContext::default();
    if let Some(w) = a.window_days {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Config(format!("window of {w} days")));
        }
        context.observation_window_days = w;
    }
    let reference = match a.mode {
        ModeArg::Frozen => Some(load_reference(a.reference.as_deref().expect("clap requires --reference"))?),
        ModeArg::PoolRelative => None,
    };
    let cfg = ScoreConfig {
        cases_sha256: file_sha256(&cases)?,
        cases,
        weights: weights_or_default(a.weights.as_deref())?,
        mode: match a.mode {
            ModeArg::PoolRelative => ScoreMode::PoolRelative,
            ModeArg::Frozen => ScoreMode::Frozen,
        },
        context,
        reference,
    };
    let (out, fitted) = execute_score(&cfg)?;
    if let Some(path) = &a.save_reference {
        let stats = fitted.ok_or_else(|| Error::Config("--save-reference needs pool-relative mode".into()))?;
        std::fs::write(path, stats.to_json()? + "\n").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    finish(out_dir, out)
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    if let Some(s) = &a.scores {
        if s.len() != 4 {
            return Err(Error::Input(format!("--scores takes 4 values, got {}", s.len())));
        }
        for v in s {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Input(format!("normalized score {v} outside [0, 1]")));
            }
        }
        outln!("{}", Typology::classify([s[0], s[1], s[2], s[3]]));
        return Ok(());
    }
    let (Some(cases), Some(reference)) = (&a.cases, &a.reference) else {
        return Err(Error::Input("give --scores, or --cases with --reference".into()));
    };
    let reference = load_reference(reference)?;
    let weights = weights_or_default(a.weights.as_deref())?;
    let ingested = ingest_path(cases)?;
    for d in &ingested.diagnostics {
        eprintln!("{d}");
    }
    if ingested.has_errors() {
        return Err(Error::Input(format!("{}: invalid records", cases.display())));
    }
    for c in &ingested.cases {
        let s = reference.score(c, &weights)?;
        outln!("{}\t{}", s.case_id, s.typology);
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, out_dir: &Path) -> Result<()> {
    if let Some(r) = &a.replay {
        let (cfg, seed) = replay_config(r, "simulate")?;
        return finish(out_dir, execute(&cfg, seed)?);
    }
    let mut population = match &a.population {
        Some(p) => PopulationSpec::load(p)?,
        None => PopulationSpec::default(),
    };
    if let Some(n) = a.debtors {
        population.debtors = n;
    }
    let rates = match &a.rates {
        Some(p) => RateTable::load(p)?,
        None => RateTable::default(),
    };
    let schedule = match a.schedule {
        ScheduleArg::Bandit => {
            // The engine seeds the policy from the run seed; keeping it out
            // of the config keeps the config hash seed-free.
            let policy = a.policy.config(0);
            policy.validate()?;
            ScheduleSpec::Bandit { policy }
        }
        ScheduleArg::Uniform => ScheduleSpec::UniformRandom,
        ScheduleArg::Fixed => ScheduleSpec::Fixed {
            action: a
                .action
                .as_deref()
                .expect("clap requires --action")
                .parse::<Action>()
                .map_err(|e| Error::Config(e.to_string()))?,
        },
    };
    let initial_policy = a.policy_state.as_deref().map(load_policy_state).transpose()?;
    let cfg = SimulateConfig {
        population,
        rates,
        experiment: ExperimentConfig {
            rounds: a.rounds,
            letter_every: a.letter_every,
            schedule,
        },
        replications: a.replications,
        trace: a.trace,
        initial_policy,
    };
    finish(out_dir, execute_simulate(&cfg, a.seed)?)
}

fn cmd_analyze(a: &AnalyzeArgs, out_dir: &Path) -> Result<()> {
    if let Some(r) = &a.replay {
        let (cfg, seed) = replay_config(r, "analyze")?;
        return finish(out_dir, execute(&cfg, seed)?);
    }
    let input = a.input.clone().expect("clap requires --input");
    let format = match a.format {
        FormatArg::Trace => LogFormat::Trace,
        FormatArg::Cases => LogFormat::Cases,
    };
    let cfg = AnalyzeConfig {
        input_sha256: file_sha256(&input)?,
        input,
        format,
        weights: match format {
            LogFormat::Cases => Some(weights_or_default(a.weights.as_deref())?),
            LogFormat::Trace => None,
        },
        context: match format {
            LogFormat::Cases => Some(ExtractionContext::default()),
            LogFormat::Trace => None,
        },
    };
    finish(out_dir, execute_analyze(&cfg)?)
}

fn save_snapshot(path: &Path, snap: &PolicySnapshot) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, snap.to_json()? + "\n").map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_snapshot(path: &Path) -> Result<PolicySnapshot> {
    PolicySnapshot::from_json(&read(path)?)
}

fn cmd_bandit(a: &BanditRunArgs) -> Result<()> {
    match &a.step {
        BanditStep::Init { policy, seed, force } => {
            if a.snapshot.exists() && !force {
                return Err(Error::Input(format!("{} exists; pass --force to replace it", a.snapshot.display())));
            }
            let state = PolicyState::new(policy.config(*seed))?;
            let rng = crate::rng::stream(*seed, crate::rng::Stream::Policy);
            save_snapshot(&a.snapshot, &PolicySnapshot { state, rng })?;
            outln!("initialized {}", a.snapshot.display());
        }
        BanditStep::Select {
            typology,
            channel,
            eligible,
        } => {
            let mut snap = load_snapshot(&a.snapshot)?;
            let t: Typology = typology.parse()?;
            let ch: Channel = channel.parse()?;
            let eligible = eligible
                .as_ref()
                .map(|v| v.iter().map(|s| s.parse::<Action>()).collect::<Result<Vec<_>>>())
                .transpose()?;
            let action = snap.state.select_action(t, ch, eligible.as_deref(), &mut snap.rng)?;
            save_snapshot(&a.snapshot, &snap)?;
            outln!("{action}");
        }
        BanditStep::Update {
            typology,
            action,
            reacted,
            paid,
        } => {
            let mut snap = load_snapshot(&a.snapshot)?;
            let t: Typology = typology.parse()?;
            let act: Action = action.parse()?;
            snap.state.observe(t, act, Outcome { reacted: *reacted, paid: *paid })?;
            save_snapshot(&a.snapshot, &snap)?;
            let (al, be) = snap.state.posterior(t, act)?;
            outln!("{t} {act}: alpha={al} beta={be}");
        }
        BanditStep::Show { typology } => {
            let snap = load_snapshot(&a.snapshot)?;
            let t: Typology = typology.parse()?;
            for i in 0..crate::policy::ARMS {
                let act = Action::from_arm_index(i).expect("dense index");
                let s = snap.state.stats(t, act)?;
                outln!(
                    "{:<28} pulls={:<8} mean={:.4}",
                    act.key(),
                    s.pulls(),
                    snap.state.posterior_mean(t, act)?
                );
            }
        }
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let mut checked = 0;
    if let Some(p) = &a.weights {
        WeightSet::load(p)?;
        outln!("ok: weights {}", p.display());
        checked += 1;
    }
    if let Some(p) = &a.rates {
        let r = RateTable::load(p)?;
        outln!("ok: rates {} ({} quoted cells)", p.display(), r.quoted_cells().len());
        checked += 1;
    }
    if let Some(p) = &a.population {
        let s = PopulationSpec::load(p)?;
        outln!("ok: population {} ({} typologies)", p.display(), s.shares.len());
        checked += 1;
    }
    if let Some(p) = &a.policy {
        load_policy_state(p)?;
        outln!("ok: policy {}", p.display());
        checked += 1;
    }
    if let Some(p) = &a.reference {
        load_reference(p)?;
        outln!("ok: reference {}", p.display());
        checked += 1;
    }
    if let Some(p) = &a.report {
        let (cfg, _) = read_header(&read(p)?)?;
        outln!("ok: {} report {}", cfg.command(), p.display());
        checked += 1;
    }
    debug_assert!(checked > 0, "clap requires one file");
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Score(a) => cmd_score(a, &cli.out_dir),
        Command::Classify(a) => cmd_classify(a),
        Command::Simulate(a) => cmd_simulate(a, &cli.out_dir),
        Command::Analyze(a) => cmd_analyze(a, &cli.out_dir),
        Command::BanditRun(a) => cmd_bandit(a),
        Command::ValidateConfig(a) => cmd_validate(a),
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Input => EXIT_INPUT,
        ErrorClass::Internal => EXIT_INTERNAL,
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
