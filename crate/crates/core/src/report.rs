//! Reproducible runs and their reports.
//!
//! Every report starts with a provenance header holding the full resolved
//! configuration, its SHA-256 and the seed. [`replay`] rebuilds the run from
//! that header, so re-running a report writes the same bytes again.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::case::{ingest_path, Diagnostic, ExtractionContext, IngestReport};
use crate::error::{Error, Result};
use crate::policy::PolicyState;
use crate::rng::replication_seed;
use crate::scoring::{score_pool, ReferenceStats, ScoredDebtor, Typology, WeightSet};
use crate::simulator::{
    best_actions, read_trace, run_experiment, BestAction, ExperimentConfig, ExperimentSummary, JsonlSink, NullSink,
    PopulationSpec, RateTable, TraceSink,
};
use crate::stats::{analyze, outcomes_from_cases, render_text, timing_table, tonality_table, Analysis, Metric, OutcomeCounts};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Overrides the output directory.
pub const OUT_DIR_ENV: &str = "DEBTOR_STRATEGY_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Standardize and normalize against the scored batch itself.
    PoolRelative,
    /// Use previously fitted reference statistics.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub cases: PathBuf,
    pub cases_sha256: String,
    pub weights: WeightSet,
    pub mode: ScoreMode,
    pub context: ExtractionContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub population: PopulationSpec,
    pub rates: RateTable,
    pub experiment: ExperimentConfig,
    pub replications: u64,
    pub trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_policy: Option<PolicyState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    /// Simulator trace lines.
    Trace,
    /// Case records; typologies come from pool-relative scoring.
    Cases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub input_sha256: String,
    pub format: LogFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ExtractionContext>,
}

/// Resolved parameters of one command. The seed and the output directory
/// are kept outside so that they do not change the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Score(ScoreConfig),
    Simulate(SimulateConfig),
    Analyze(AnalyzeConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Score(_) => "score",
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Analyze(_) => "analyze",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStamp {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub provenance: ProvenanceStamp,
    pub result: T,
}

fn canonical_into(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push(':');
                canonical_into(&map[*k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canonical_into(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    canonical_into(v, &mut out);
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &RunConfig) -> Result<String> {
    let v = serde_json::to_value(config)?;
    Ok(sha256_hex(canonical_json(&v).as_bytes()))
}

pub fn stamp(config: RunConfig, seed: Option<u64>) -> Result<ProvenanceStamp> {
    Ok(ProvenanceStamp {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config_hash: config_hash(&config)?,
        seed,
        config,
    })
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

/// An output file relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact {
            name: name.to_string(),
            bytes,
        })
    }

    fn text(name: &str, text: String) -> Self {
        Artifact {
            name: name.to_string(),
            bytes: text.into_bytes(),
        }
    }
}

pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for a in artifacts {
        let path = out_dir.join(&a.name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
        std::fs::write(&path, &a.bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

/// Artifacts plus non-fatal diagnostics to show the user.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    pub summary: String,
}

// ---------------------------------------------------------------------------
// score

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub mode: ScoreMode,
    pub debtors: usize,
    pub typology_counts: BTreeMap<Typology, u64>,
    pub records: Vec<ScoredDebtor>,
    pub warnings: Vec<Diagnostic>,
}

fn ingest_checked(path: &Path, expected_sha: &str) -> Result<IngestReport> {
    let actual = file_sha256(path)?;
    if actual != expected_sha {
        return Err(Error::Input(format!(
            "{} changed since the report was written (sha256 {actual}, expected {expected_sha})",
            path.display()
        )));
    }
    let report = ingest_path(path)?;
    if report.has_errors() {
        let lines: Vec<String> = report.errors().map(|d| d.to_string()).collect();
        return Err(Error::Input(format!(
            "{}: {} invalid record(s)\n{}",
            path.display(),
            lines.len(),
            lines.join("\n")
        )));
    }
    Ok(report)
}

pub fn score_records(cfg: &ScoreConfig, cases: &[crate::case::DebtorCase]) -> Result<(Option<ReferenceStats>, Vec<ScoredDebtor>)> {
    match cfg.mode {
        ScoreMode::PoolRelative => {
            let (stats, scored) = score_pool(cases, &cfg.weights, &cfg.context)?;
            Ok((Some(stats), scored))
        }
        ScoreMode::Frozen => {
            let reference = cfg
                .reference
                .as_ref()
                .ok_or_else(|| Error::Config("frozen scoring needs reference statistics".into()))?;
            let scored = cases
                .iter()
                .map(|c| reference.score(c, &cfg.weights))
                .collect::<Result<Vec<_>>>()?;
            Ok((None, scored))
        }
    }
}

pub fn execute_score(cfg: &ScoreConfig) -> Result<(RunOutput, Option<ReferenceStats>)> {
    let ingested = ingest_checked(&cfg.cases, &cfg.cases_sha256)?;
    let (reference, records) = score_records(cfg, &ingested.cases)?;
    let mut typology_counts = BTreeMap::new();
    for r in &records {
        *typology_counts.entry(r.typology).or_insert(0u64) += 1;
    }
    let mut jsonl = String::new();
    for r in &records {
        jsonl.push_str(&serde_json::to_string(r)?);
        jsonl.push('\n');
    }
    let warnings: Vec<String> = ingested.diagnostics.iter().map(|d| d.to_string()).collect();
    let result = ScoreResult {
        mode: cfg.mode,
        debtors: records.len(),
        typology_counts,
        records,
        warnings: ingested.diagnostics,
    };
    let summary = format!(
        "scored {} debtor(s) into {} typolog{}",
        result.debtors,
        result.typology_counts.len(),
        if result.typology_counts.len() == 1 { "y" } else { "ies" }
    );
    let report = Report {
        provenance: stamp(RunConfig::Score(cfg.clone()), None)?,
        result,
    };
    Ok((
        RunOutput {
            artifacts: vec![Artifact::json("score.json", &report)?, Artifact::text("scores.jsonl", jsonl)],
            warnings,
            summary,
        },
        reference,
    ))
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub index: u64,
    pub seed: u64,
    pub summary: ExperimentSummary,
    pub best_actions: BTreeMap<Typology, BestAction>,
    /// Share of debtors with at least one reaction, per typology.
    pub case_reaction_rates: BTreeMap<Typology, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub replications: Vec<ReplicationResult>,
    /// Counts over all replications.
    pub merged_counts: OutcomeCounts,
}

/// Seed of replication `index`; a single run uses the run seed itself.
pub fn seed_for(seed: u64, replications: u64, index: u64) -> u64 {
    if replications <= 1 {
        seed
    } else {
        replication_seed(seed, index)
    }
}

fn trace_name(replications: u64, index: u64) -> String {
    if replications <= 1 {
        "trace.jsonl".to_string()
    } else {
        format!("trace-{index:03}.jsonl")
    }
}

fn run_replication(cfg: &SimulateConfig, seed: u64, index: u64) -> Result<(ReplicationResult, Option<Artifact>)> {
    let s = seed_for(seed, cfg.replications, index);
    let (summary, trace) = if cfg.trace {
        let mut sink = JsonlSink::new(Vec::new(), "trace buffer");
        let summary = run_experiment(
            &cfg.population,
            &cfg.rates,
            &cfg.experiment,
            s,
            cfg.initial_policy.clone(),
            &mut sink as &mut dyn TraceSink,
        )?;
        let bytes = sink.into_inner();
        (
            summary,
            Some(Artifact {
                name: trace_name(cfg.replications, index),
                bytes,
            }),
        )
    } else {
        let summary = run_experiment(
            &cfg.population,
            &cfg.rates,
            &cfg.experiment,
            s,
            cfg.initial_policy.clone(),
            &mut NullSink,
        )?;
        (summary, None)
    };
    let best = best_actions(&summary);
    let case_reaction_rates = summary
        .case_level
        .iter()
        .filter_map(|(t, c)| c.reaction_rate().map(|r| (*t, r)))
        .collect();
    Ok((
        ReplicationResult {
            index,
            seed: s,
            summary,
            best_actions: best,
            case_reaction_rates,
        },
        trace,
    ))
}

/// Replications run on scoped threads and are merged in index order, so the
/// result does not depend on scheduling.
pub fn execute_simulate(cfg: &SimulateConfig, seed: u64) -> Result<RunOutput> {
    cfg.population.validate()?;
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let workers = std::thread::available_parallelism()
        .map(|n| n.get() as u64)
        .unwrap_or(1)
        .min(cfg.replications);
    type Slot = Option<Result<(ReplicationResult, Option<Artifact>)>>;
    let mut slots: Vec<Slot> =
        (0..cfg.replications).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots.chunks_mut(cfg.replications.div_ceil(workers) as usize).enumerate().collect();
        let per = cfg.replications.div_ceil(workers);
        for (c, chunk) in chunks {
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_replication(cfg, seed, c as u64 * per + k as u64));
                }
            });
        }
    });
    let mut replications = Vec::new();
    let mut artifacts = Vec::new();
    let mut merged = OutcomeCounts::new();
    for slot in slots {
        let (r, trace) = slot.expect("every replication ran")?;
        merged.merge(&r.summary.counts);
        artifacts.extend(trace);
        replications.push(r);
    }
    let mut summary = String::new();
    if let Some(first) = replications.first() {
        summary.push_str(&format!(
            "{} replication(s), {} debtors x {} rounds\n",
            replications.len(),
            first.summary.debtors,
            first.summary.rounds
        ));
        for (t, b) in &first.best_actions {
            summary.push_str(&format!("{t}: best {} ({:.1} %, {} pulls)\n", b.action, b.rate * 100.0, b.pulls));
        }
    }
    let report = Report {
        provenance: stamp(RunConfig::Simulate(cfg.clone()), Some(seed))?,
        result: SimulateResult {
            replications,
            merged_counts: merged,
        },
    };
    artifacts.insert(0, Artifact::json("simulate.json", &report)?);
    Ok(RunOutput {
        artifacts,
        warnings: Vec::new(),
        summary,
    })
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResult {
    pub unattributed_reactions: u64,
    pub analysis: Analysis,
}

fn load_counts(cfg: &AnalyzeConfig) -> Result<(OutcomeCounts, u64, Vec<String>)> {
    let actual = file_sha256(&cfg.input)?;
    if actual != cfg.input_sha256 {
        return Err(Error::Input(format!(
            "{} changed since the report was written",
            cfg.input.display()
        )));
    }
    match cfg.format {
        LogFormat::Trace => {
            let file = std::fs::File::open(&cfg.input).map_err(|e| Error::io(cfg.input.display().to_string(), e))?;
            let trace = read_trace(std::io::BufReader::new(file))?;
            Ok((OutcomeCounts::from_trace(&trace), 0, Vec::new()))
        }
        LogFormat::Cases => {
            let ingested = ingest_checked(&cfg.input, &cfg.input_sha256)?;
            let weights = cfg.weights.clone().unwrap_or_default();
            let ctx = cfg.context.clone().unwrap_or_default();
            let (_, scored) = score_pool(&ingested.cases, &weights, &ctx)?;
            let typologies: Vec<Typology> = scored.iter().map(|s| s.typology).collect();
            let out = outcomes_from_cases(&ingested.cases, &typologies)?;
            let warnings = ingested.diagnostics.iter().map(|d| d.to_string()).collect();
            Ok((out.counts, out.unattributed_reactions, warnings))
        }
    }
}

pub fn execute_analyze(cfg: &AnalyzeConfig) -> Result<RunOutput> {
    let (counts, unattributed, warnings) = load_counts(cfg)?;
    let analysis = analyze(&counts)?;
    let text = render_text(&analysis);
    let mut artifacts = Vec::new();
    let report = Report {
        provenance: stamp(RunConfig::Analyze(cfg.clone()), None)?,
        result: AnalyzeResult {
            unattributed_reactions: unattributed,
            analysis,
        },
    };
    artifacts.push(Artifact::json("analyze.json", &report)?);
    artifacts.push(Artifact::text("analyze.txt", text.clone()));
    for metric in [Metric::Reaction, Metric::Payment] {
        artifacts.push(Artifact::text(
            &format!("tables/{}_tonality.csv", metric.as_str()),
            tonality_table(&counts, metric).to_csv(),
        ));
        artifacts.push(Artifact::text(
            &format!("tables/{}_timing.csv", metric.as_str()),
            timing_table(&counts, metric).to_csv(),
        ));
    }
    Ok(RunOutput {
        artifacts,
        warnings,
        summary: text,
    })
}

// ---------------------------------------------------------------------------
// replay

/// Config and seed from a report's header, checked against its hash.
pub fn read_header(text: &str) -> Result<(RunConfig, Option<u64>)> {
    #[derive(Deserialize)]
    struct Header {
        provenance: ProvenanceStamp,
    }
    let h: Header = serde_json::from_str(text).map_err(|e| Error::Input(format!("not a report: {e}")))?;
    let recomputed = config_hash(&h.provenance.config)?;
    if recomputed != h.provenance.config_hash {
        return Err(Error::Input(format!(
            "report config hash {} does not match its config ({recomputed})",
            h.provenance.config_hash
        )));
    }
    Ok((h.provenance.config, h.provenance.seed))
}

pub fn execute(config: &RunConfig, seed: Option<u64>) -> Result<RunOutput> {
    match config {
        RunConfig::Score(c) => Ok(execute_score(c)?.0),
        RunConfig::Simulate(c) => {
            let seed = seed.ok_or_else(|| Error::Input("simulate report has no seed".into()))?;
            execute_simulate(c, seed)
        }
        RunConfig::Analyze(c) => execute_analyze(c),
    }
}

pub fn replay(report_path: &Path) -> Result<RunOutput> {
    let text = std::fs::read_to_string(report_path).map_err(|e| Error::io(report_path.display().to_string(), e))?;
    let (config, seed) = read_header(&text)?;
    execute(&config, seed)
}
