//! Rate tables and the two independence tests.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::counts::{CellCounts, OutcomeCounts};
use super::table::{chi_square, format_p, ChiSquareResult, ContingencyTable};
use crate::error::{Error, Result};
use crate::policy::{Action, TimeSlot, Tonality};
use crate::scoring::Typology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Typology,
    TypologyTonality,
    /// Email messages only; letters have no slot.
    TypologyTonalitySlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Reaction,
    Payment,
}

impl Metric {
    fn successes(self, c: CellCounts) -> u64 {
        match self {
            Metric::Reaction => c.reactions,
            Metric::Payment => c.payments,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Reaction => "reaction",
            Metric::Payment => "payment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub typology: Typology,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tonality: Option<Tonality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<TimeSlot>,
    pub exposures: u64,
    pub successes: u64,
    pub rate: f64,
}

/// Success rate per group. Groups without exposures are left out rather
/// than reported as zero.
pub fn rates_by(counts: &OutcomeCounts, grouping: Grouping, metric: Metric) -> Vec<RateRow> {
    let mut out = Vec::new();
    let mut push = |typology, tonality, slot, c: CellCounts| {
        if c.exposures > 0 {
            let s = metric.successes(c);
            out.push(RateRow {
                typology,
                tonality,
                slot,
                exposures: c.exposures,
                successes: s,
                rate: s as f64 / c.exposures as f64,
            });
        }
    };
    for t in Typology::all() {
        match grouping {
            Grouping::Typology => push(t, None, None, counts.typology_total(t)),
            Grouping::TypologyTonality => {
                for ton in Tonality::ALL {
                    push(t, Some(ton), None, counts.sum_where(t, |a| a.tonality == ton));
                }
            }
            Grouping::TypologyTonalitySlot => {
                for ton in Tonality::ALL {
                    for s in TimeSlot::ALL {
                        push(t, Some(ton), Some(s), counts.get(t, Action::email(ton, s)));
                    }
                }
            }
        }
    }
    out
}

fn typology_rows() -> Vec<String> {
    Typology::all().iter().map(|t| t.label()).collect()
}

/// Successes per typology (16 rows) and tonality (5 columns).
pub fn tonality_table(counts: &OutcomeCounts, metric: Metric) -> ContingencyTable {
    let cells = Typology::all()
        .iter()
        .map(|&t| {
            Tonality::ALL
                .iter()
                .map(|&ton| metric.successes(counts.sum_where(t, |a| a.tonality == ton)))
                .collect()
        })
        .collect();
    ContingencyTable::new(
        typology_rows(),
        Tonality::ALL.iter().map(|t| t.to_string()).collect(),
        cells,
    )
    .expect("fixed shape")
}

/// Successes per typology (16 rows) and email tonality × slot (20 columns).
pub fn timing_table(counts: &OutcomeCounts, metric: Metric) -> ContingencyTable {
    let arms: Vec<Action> = Action::email_arms().collect();
    let cells = Typology::all()
        .iter()
        .map(|&t| arms.iter().map(|&a| metric.successes(counts.get(t, a))).collect())
        .collect();
    ContingencyTable::new(typology_rows(), arms.iter().map(|a| a.key()).collect(), cells).expect("fixed shape")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub design: String,
    pub metric: Metric,
    pub rows: usize,
    pub cols: usize,
    pub df: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ChiSquareResult>,
    /// Why the test was not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

fn run_test(design: &str, metric: Metric, table: &ContingencyTable) -> Result<TestReport> {
    let (result, skipped) = match chi_square(table) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::ZeroMarginal(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(TestReport {
        design: design.to_string(),
        metric,
        rows: table.rows().len(),
        cols: table.cols().len(),
        df: table.df(),
        result,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub messages: u64,
    pub reaction_by_typology: Vec<RateRow>,
    pub payment_by_typology: Vec<RateRow>,
    pub reaction_by_tonality: Vec<RateRow>,
    pub reaction_by_timing: Vec<RateRow>,
    pub tests: Vec<TestReport>,
}

pub const TONALITY_DESIGN: &str = "typology x tonality";
pub const TIMING_DESIGN: &str = "typology x tonality@slot";

pub fn analyze(counts: &OutcomeCounts) -> Result<Analysis> {
    let total = counts.total();
    if total.exposures == 0 {
        return Err(Error::Input("log contains no messages".into()));
    }
    let mut tests = Vec::new();
    for metric in [Metric::Reaction, Metric::Payment] {
        tests.push(run_test(TONALITY_DESIGN, metric, &tonality_table(counts, metric))?);
        tests.push(run_test(TIMING_DESIGN, metric, &timing_table(counts, metric))?);
    }
    Ok(Analysis {
        messages: total.exposures,
        reaction_by_typology: rates_by(counts, Grouping::Typology, Metric::Reaction),
        payment_by_typology: rates_by(counts, Grouping::Typology, Metric::Payment),
        reaction_by_tonality: rates_by(counts, Grouping::TypologyTonality, Metric::Reaction),
        reaction_by_timing: rates_by(counts, Grouping::TypologyTonalitySlot, Metric::Reaction),
        tests,
    })
}

fn pct(r: f64) -> String {
    format!("{:.1}", r * 100.0)
}

/// `design: chi2(df, N = n) = stat, p < .001`
pub fn format_test(t: &TestReport) -> String {
    match (&t.result, &t.skipped) {
        (Some(r), _) => {
            let warn = if r.low_expected { " [expected count < 5]" } else { "" };
            format!(
                "{} ({}): chi2({}, N = {}) = {:.2}, p {}{warn}",
                t.design,
                t.metric.as_str(),
                r.df,
                r.n,
                r.statistic,
                match format_p(r.p_value) {
                    s if s.starts_with('<') => s,
                    s => format!("= {s}"),
                }
            )
        }
        (None, Some(reason)) => format!("{} ({}): skipped, {reason}", t.design, t.metric.as_str()),
        (None, None) => format!("{} ({}): not run", t.design, t.metric.as_str()),
    }
}

/// Plain-text report: per-typology rates, a tonality grid, and the tests.
pub fn render_text(a: &Analysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "messages: {}", a.messages);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>10}", "Typology", "Exposures", "Reaction %", "Payment %");
    for r in &a.reaction_by_typology {
        let pay = a
            .payment_by_typology
            .iter()
            .find(|p| p.typology == r.typology)
            .map_or("-".to_string(), |p| pct(p.rate));
        let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>10}", r.typology, r.exposures, pct(r.rate), pay);
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:<8}", "Reaction %");
    for t in Tonality::ALL {
        let _ = write!(out, " {:>18}", t.as_str());
    }
    let _ = writeln!(out);
    for ty in Typology::all() {
        if !a.reaction_by_tonality.iter().any(|r| r.typology == ty) {
            continue;
        }
        let _ = write!(out, "{:<10}", ty);
        for t in Tonality::ALL {
            let cell = a
                .reaction_by_tonality
                .iter()
                .find(|r| r.typology == ty && r.tonality == Some(t))
                .map_or("-".to_string(), |r| pct(r.rate));
            let _ = write!(out, " {cell:>18}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
    for t in &a.tests {
        let _ = writeln!(out, "{}", format_test(t));
    }
    out
}
