//! Cloud side of the navigator: the engine that owns persisted state, the
//! request journal, provider alerts, and the HTTP API.
//!
//! All mutations go through [`engine::Engine::submit`], which journals the
//! [`journal::Command`] before applying it. Opening a data directory rebuilds
//! everything else from that journal.

pub mod alerts;
pub mod api;
pub mod auth;
pub mod client;
pub mod engine;
pub mod error;
pub mod journal;
pub mod model;

pub use engine::{Engine, EngineOptions, Outcome};
pub use error::ServiceError;
