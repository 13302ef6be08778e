//! Scoring, enumeration and measurement-scale analysis for ranked retrieval results.
//!
//! A [`Serp`] is the sequence of relevance grades a system returned for a
//! query. Metrics in [`metrics`] map SERPs to exact [`ScoreValue`]s;
//! [`enumeration`] builds whole universes of SERP classes and their distinct
//! score sets; [`dominance`] implements the pointwise and swap orders and
//! their Hasse diagrams; [`intervalize`] maps a score set onto equi-spaced
//! points; [`trec`] reads qrels and runs and writes score reports.

pub mod dominance;
pub mod enumeration;
pub mod error;
pub mod exact;
pub mod intervalize;
pub mod metrics;
pub mod model;
pub mod trec;

/// Exact rational used for gains, parameters and most scores.
pub type Rational = num_rational::BigRational;

pub use error::{Error, Result};
pub use exact::{LogLinear, ScoreValue};
pub use metrics::{Depth, Discount, Metric, MetricSpec, Score, Scorer};
pub use model::{
    gain_vector, serp_from_run, GainMap, Grade, GradeCensus, GradeScale, RunRanking, Serp,
    TopicJudgments, UnjudgedPolicy,
};
