//! Collection cases, their event log, and feature extraction.

mod features;
mod ingest;
mod model;

pub use features::{
    attr, auxiliary_events, dependents, extract_all, extract_features, feature, CaseInput, ExtractionContext,
    FeatureDef, FeatureKind, FeatureVector, REGISTRY,
};
pub use ingest::{ingest_cases, ingest_path, Diagnostic, IngestReport, Severity, REQUIRED_FIELDS};
pub use model::{
    CaseEvent, Cents, DebtorCase, EventKind, EventTag, InboundEmail, PaymentMethod, StaticValue, Timestamp,
};
