//! HTTP API for authoring layered charts: projects, per-narrative binding,
//! chart edits, feedback, regeneration and exports, persisted as an
//! append-only event log.

pub mod api;
pub mod curation;
pub mod engine;
pub mod model;
pub mod store;

pub use api::{router, serve, serve_blocking, IDEMPOTENCY_HEADER};
pub use curation::{promote, read_curation, Approval, CurationLog, CurationRecord, PromoteReport};
pub use engine::{chart_id, ApiError, Engine, EngineError, ExportFormat, Reply, ServiceConfig, CURATION_FILE, STORE_FILE};
pub use model::*;
