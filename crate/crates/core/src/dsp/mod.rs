//! Signal conditioning and per-frame wavelet features.

pub mod butterworth;
pub mod features;
pub mod framing;
pub mod wavelet;

pub use butterworth::{butterworth_bandpass, design_bandpass, Biquad, SosFilter};
pub use features::{dwt_features, feature_names, featurize, ChannelFeatureBlock, STAT_NAMES};
pub use framing::{frame, FrameSpec};
pub use wavelet::{wavedec, waverec, Decomposition, Wavelet};
