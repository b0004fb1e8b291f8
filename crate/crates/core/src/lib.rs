//! Real-time foreign-object-intrusion tracking and identification.
//!
//! The engine consumes per-frame detections that already carry appearance
//! embeddings, maintains multi-object tracks through feature-assisted IoU
//! association, classifies each track by cosine retrieval against an
//! extensible reference store with per-track majority voting, and raises
//! zone-intrusion alerts. Detection and embedding extraction happen
//! upstream; everything here works from file or stream records.
//!
//! Modules:
//! - [`embedding`]: appearance vectors, cosine similarity, normalization.
//! - [`geometry`]: box math, IoU, zones, the approach predicate.
//! - [`losses`]: verifiable training-loss math (triplet, BCE, dice).
//! - [`taxonomy`] / [`store`]: class labels, the reference embedding store,
//!   majority voting.
//! - [`tracker`]: the feature-assisted IoU multi-object tracker.
//! - [`pipeline`] / [`formats`]: per-frame orchestration, alerting, JSONL IO.
//! - [`metrics`]: precision/recall/F1, AP, identity switches.
//! - [`synth`] / [`fixtures`] / [`bench`]: scenario generation, bundled
//!   traces, and the retrieval latency benchmark behind the CLI.

pub mod bench;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod formats;
pub mod geometry;
mod kernel;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod taxonomy;
pub mod tracker;

pub use error::{Error, Result};
