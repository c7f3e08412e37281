use serde::{Deserialize, Serialize};

/// Sliding window layout over a signal of known length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub hop: usize,
    pub n_frames: usize,
}

impl FrameSpec {
    pub fn from_samples(n_samples: usize, frame_len: usize, hop: usize) -> Self {
        let frame_len = frame_len.max(1);
        let hop = hop.max(1);
        let n_frames = if n_samples >= frame_len {
            (n_samples - frame_len) / hop + 1
        } else {
            0
        };
        Self {
            frame_len,
            hop,
            n_frames,
        }
    }

    /// `frame_len = round(frame_len_s * fs)`, `hop = floor(frame_len * (1 - overlap))`.
    pub fn from_seconds(n_samples: usize, fs: f64, frame_len_s: f64, overlap: f64) -> Self {
        let frame_len = (frame_len_s * fs).round() as usize;
        let hop = (frame_len as f64 * (1.0 - overlap) + 1e-9).floor() as usize;
        Self::from_samples(n_samples, frame_len, hop)
    }

    pub fn start(&self, t: usize) -> usize {
        t * self.hop
    }

    pub fn start_s(&self, t: usize, fs: f64) -> f64 {
        self.start(t) as f64 / fs
    }

    pub fn end_s(&self, t: usize, fs: f64) -> f64 {
        (self.start(t) + self.frame_len) as f64 / fs
    }
}

/// Frame `t` covers `[t * hop, t * hop + frame_len)`; the trailing partial
/// window is dropped.
pub fn frame<'a>(signal: &'a [f64], spec: &FrameSpec) -> Vec<&'a [f64]> {
    (0..spec.n_frames)
        .map(|t| &signal[spec.start(t)..spec.start(t) + spec.frame_len])
        .collect()
}
