//! Correlation-filter object tracker with joint scale and aspect-ratio
//! estimation over a 2D size domain, a two-stage proposal-based re-detection
//! strategy for long-term tracking, a deterministic synthetic-sequence
//! generator, and a one-pass-evaluation benchmark harness. CPU-only,
//! real-time oriented.

pub mod config;
pub mod eval;
pub mod features;
pub mod geom;
pub mod imgio;
pub mod redetect;
pub mod runlog;
pub mod sizefilter;
pub mod spectral;
pub mod synth;
pub mod tracker;
pub mod trans;

pub use config::{Mode, TrackerConfig};
pub use geom::{Bbox, Rect};
pub use tracker::{Tracker, TrackerOutput};
