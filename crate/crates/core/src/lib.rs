//! Channel attribution for multichannel intracranial (SEEG) recordings.
//!
//! Frames of each channel are band-pass filtered and summarized with wavelet
//! statistics, a gradient-boosted tree model separates seizure (PPS) frames
//! from non-seizure frames, and exact Shapley values over channel coalitions
//! rank the channels by how much they push the model toward the seizure
//! class. The ranking is cut at its elbow and compared across the
//! clinician's channel set and its electrode and zone extensions.
//!
//! ```no_run
//! use seeg_rank::{ingest, montage::Montage, ranking, RunConfig};
//! # fn main() -> seeg_rank::Result<()> {
//! let montage = Montage::load("montage.json")?;
//! let loaded = ingest::load_recording("signal.csv".as_ref(), "sidecar.json".as_ref(), &montage)?;
//! let out = ranking::run_workflow(
//!     &loaded.recording,
//!     &loaded.annotations,
//!     &montage,
//!     &loaded.selected,
//!     &RunConfig::default(),
//!     &ranking::Stage::ALL,
//! )?;
//! println!("{}", out.report.to_json());
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` style checks are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod gbdt;
pub mod ingest;
pub mod montage;
pub mod ranking;
pub mod report;
pub mod seed;
pub mod shapley;
pub mod synth;

pub use config::{GbdtParams, RunConfig, ShapEngine};
pub use error::{Error, Result};
pub use montage::{ChannelLabel, Montage};
