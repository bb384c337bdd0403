//! Core library of the mental health navigator.
//!
//! The crate is organized around the closed monitoring → estimation → guidance loop:
//!
//! * [`ingest`] parses raw sensor CSV streams and aligns them on a common grid.
//! * [`chronicle`] is the append-only per-subject life-event log.
//! * [`activity_fca`] recognizes daily activities with formal concept analysis.
//! * [`physio`] turns PPG and GSR into HRV, respiration, EDA states and stress.
//! * [`ema`] schedules and aggregates in-the-moment self reports.
//! * [`personal_model`] keeps incremental per-subject baselines and thresholds.
//! * [`estimator`] maps daily features into a state vector, screens and regimes.
//! * [`navigator`] handles goals, intervention routes, recommendations and feedback.
//! * [`simkit`] generates seeded synthetic cohorts and replays them.
//! * [`pipeline`] wires the modules into per-day processing.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod activity_fca;
pub mod chronicle;
pub mod config;
pub mod ema;
pub mod estimator;
pub mod ingest;
pub mod navigator;
pub mod personal_model;
pub mod physio;
pub mod pipeline;
pub mod simkit;
pub mod stats;
pub mod time;

pub use chronicle::{ActivityLabel, ChronicleStore, EventRecord, SubjectId};
pub use ingest::{AlignedFrame, Channel, SampleBatch, StreamDescriptor};
