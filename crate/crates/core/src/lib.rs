//! End-to-end mood forecasting from raw smartphone sensing logs.
//!
//! The pipeline ingests long-format observation logs (one `id,time,variable,value`
//! row per measurement), pivots them into per-user daily feature tables, prunes
//! and imputes missing data, and predicts each user's next-day mood with three
//! predictors:
//!
//! * a one-vs-one linear soft-margin SVM trained by an exact SMO dual solver,
//! * a per-user Elman recurrent network trained with SGD and full
//!   backpropagation through time,
//! * a naive persistence baseline (tomorrow's mood equals today's).
//!
//! [`pipeline`] wires the stages together behind a JSON config and writes the
//! evaluation artifacts (confusion matrices, accuracy, per-user RMSE tables,
//! plot-data CSVs). [`synth`] generates seeded synthetic datasets shaped like
//! real sensing logs so the whole pipeline runs at desk scale.
//!
//! With the default `parallel` feature, independent work units (per-user RNN
//! trainings, per-pair SVM solves) run on a rayon pool; disabling the feature
//! falls back to sequential loops with identical results.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod matrix;
pub mod parallel;
pub mod pipeline;
pub mod preprocess;
pub mod rnn;
pub mod seeds;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
