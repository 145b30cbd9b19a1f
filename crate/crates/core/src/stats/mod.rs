//! Rates, contingency tables and chi-square tests.

mod counts;
mod gamma;
mod rates;
mod table;

pub use counts::{outcomes_from_cases, CaseOutcomes, CellCounts, OutcomeCounts};
pub use gamma::{chi_square_cdf, chi_square_sf, ln_gamma, regularized_lower_gamma, regularized_upper_gamma};
pub use rates::{
    analyze, format_test, rates_by, render_text, timing_table, tonality_table, Analysis, Grouping, Metric, RateRow,
    TestReport, TIMING_DESIGN, TONALITY_DESIGN,
};
pub use table::{chi_square, format_p, ChiSquareResult, ContingencyTable, MIN_EXPECTED};
