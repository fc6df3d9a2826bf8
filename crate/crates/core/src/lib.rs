//! Weight-of-evidence diagnosis.
//!
//! Learns significant symptom groups from labeled case data, turns fuzzy
//! measurements into crisp events through optimal α-cuts, and scores new
//! cases by adding group weights of evidence onto prior log odds.
//!
//! The pipeline, end to end:
//!
//! 1. [`schema::Schema`] and [`dataset::Dataset`] load attribute definitions and cases.
//! 2. [`miner::mine`] binarizes symptoms, enumerates groups and keeps the significant ones.
//! 3. [`kb::KnowledgeBase`] persists the result.
//! 4. [`inference::infer`] builds the evidence ledger for a new case.
//! 5. [`baseline`] compares predictive values against a fixed logistic model.

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod evidence;
pub mod fuzzy;
pub mod inference;
pub mod kb;
pub mod miner;
pub mod schema;
pub mod symptom;

pub use dataset::{Case, Dataset, Hypothesis, Value};
pub use error::{Error, Result};
pub use evidence::{ContingencyTable, PriorOdds, ProbabilityMode, WeightEstimate};
pub use inference::{EvidenceReport, ScoreWeights};
pub use kb::KnowledgeBase;
pub use miner::{MinedRule, MiningConfig};
pub use schema::Schema;
pub use symptom::{SymptomDescriptor, SymptomGroup};
