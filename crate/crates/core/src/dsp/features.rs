use crate::config::RunConfig;
use crate::error::Result;
use crate::ingest::Recording;
use crate::montage::ChannelLabel;

use super::butterworth::design_bandpass;
use super::framing::{frame, FrameSpec};
use super::wavelet::{wavedec, Wavelet};

pub const STAT_NAMES: [&str; 4] = ["mean_abs", "std", "energy", "line_length"];

/// Per-channel feature matrix, row-major `n_frames x n_features`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFeatureBlock {
    pub channel: ChannelLabel,
    pub feature_names: Vec<String>,
    pub n_frames: usize,
    pub values: Vec<f64>,
}

impl ChannelFeatureBlock {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let width = self.n_features();
        &self.values[t * width..(t + 1) * width]
    }
}

pub fn band_names(levels: usize) -> Vec<String> {
    (1..=levels)
        .map(|l| format!("D{l}"))
        .chain(std::iter::once(format!("A{levels}")))
        .collect()
}

/// `"<channel>.<band>.<stat>"` in feature order.
pub fn feature_names(channel: &ChannelLabel, levels: usize) -> Vec<String> {
    band_names(levels)
        .iter()
        .flat_map(|band| STAT_NAMES.iter().map(move |stat| format!("{channel}.{band}.{stat}")))
        .collect()
}

fn band_stats(c: &[f64]) -> [f64; 4] {
    let n = c.len() as f64;
    let mean_abs = c.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let energy = c.iter().map(|v| v * v).sum::<f64>();
    let line_length = c.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
    [mean_abs, var.sqrt(), energy, line_length]
}

/// Statistics of every wavelet band of one frame, bands ordered D1..DL, AL.
pub fn dwt_features(frame: &[f64], wavelet: Wavelet, levels: usize) -> Result<Vec<f64>> {
    let dec = wavedec(frame, wavelet, levels)?;
    Ok(dec.bands().flat_map(band_stats).collect())
}

fn featurize_channel(
    label: &ChannelLabel,
    signal: &[f64],
    spec: &FrameSpec,
    fs: f64,
    cfg: &RunConfig,
) -> Result<ChannelFeatureBlock> {
    let filter = design_bandpass(fs, cfg.band.0, cfg.band.1, cfg.filter_order)?;
    let filtered = filter.filtfilt(signal);
    let names = feature_names(label, cfg.dwt_levels);
    let mut values = Vec::with_capacity(spec.n_frames * names.len());
    for window in frame(&filtered, spec) {
        values.extend(dwt_features(window, cfg.wavelet, cfg.dwt_levels)?);
    }
    Ok(ChannelFeatureBlock {
        channel: label.clone(),
        feature_names: names,
        n_frames: spec.n_frames,
        values,
    })
}

pub fn frame_spec_for(rec: &Recording, cfg: &RunConfig) -> FrameSpec {
    FrameSpec::from_seconds(rec.n_samples(), rec.sampling_rate(), cfg.frame_len_s, cfg.frame_overlap)
}

/// Filter, frame and wavelet-summarize every channel. Blocks come back in
/// recording channel order.
pub fn featurize(rec: &Recording, cfg: &RunConfig) -> Result<(FrameSpec, Vec<ChannelFeatureBlock>)> {
    let spec = frame_spec_for(rec, cfg);
    let fs = rec.sampling_rate();
    let work = |c: usize| featurize_channel(&rec.channel_labels()[c], rec.column(c), &spec, fs, cfg);

    #[cfg(feature = "parallel")]
    let blocks = {
        use rayon::prelude::*;
        (0..rec.n_channels())
            .into_par_iter()
            .map(work)
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let blocks = (0..rec.n_channels()).map(work).collect::<Result<Vec<_>>>()?;

    Ok((spec, blocks))
}
