//! Deterministic synthetic recordings with known ictal channels.
//!
//! Every channel carries pink (1/f) noise scaled to `noise_rms`. During each
//! seizure the ictal channels additionally carry an amplitude-modulated
//! oscillation whose frequency sweeps down through `ictal_band`, scaled so
//! its RMS over the burst is `ictal_amplitude_ratio` times the baseline RMS.
//! The modulation is either a slow sine or an on/off gate that the ictal
//! channels take turns on.
//!
//! Channel `k` (0-based, montage order) draws from a ChaCha8 stream seeded
//! with `derive_seed(seed, k + 1)`, so a channel's samples depend only on
//! the master seed and its position in the montage.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    validate_annotations, write_sidecar, write_signal_csv, Recording, SeizureAnnotation, Sidecar, ANALYSIS_MAX_HZ,
};
use crate::montage::{ChannelLabel, Montage, MontageFile};
use crate::seed::derive_seed;

/// Samples discarded while the pink-noise filter settles.
const BURN_IN: usize = 4096;
/// Raised-cosine ramp at both ends of a burst.
const RAMP_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MontageSource {
    Inline(MontageFile),
    /// Relative paths resolve against the spec file's directory.
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeizureWindow {
    pub onset_s: f64,
    pub offset_s: f64,
}

/// Envelope of an ictal burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    /// `1 + depth * sin(2 pi rate_hz t)`.
    Sine { depth: f64, rate_hz: f64 },
    /// On for a `duty` fraction of each period. The j-th of n ictal channels
    /// is shifted by `j / n` of a period.
    Gated { period_s: f64, duty: f64 },
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation::Sine {
            depth: 0.5,
            rate_hz: 0.5,
        }
    }
}

impl Modulation {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Modulation::Sine { depth, rate_hz } => (0.0..=1.0).contains(&depth) && rate_hz > 0.0,
            Modulation::Gated { period_s, duty } => period_s > 0.0 && duty > 0.0 && duty <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Spec(format!("invalid modulation {self:?}")))
        }
    }

    /// Envelope at burst time `tau` for ictal channel `j` of `n`.
    fn envelope(&self, tau: f64, j: usize, n: usize) -> f64 {
        match *self {
            Modulation::Sine { depth, rate_hz } => 1.0 + depth * (2.0 * PI * rate_hz * tau).sin(),
            Modulation::Gated { period_s, duty } => {
                let cycle = (tau / period_s + j as f64 / n.max(1) as f64).fract();
                if cycle < duty {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn default_fs() -> f64 {
    1000.0
}

fn default_band() -> (f64, f64) {
    (8.0, 14.0)
}

fn default_ratio() -> f64 {
    4.0
}

fn default_noise_rms() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub montage: MontageSource,
    #[serde(default = "default_fs")]
    pub fs: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub seizures: Vec<SeizureWindow>,
    #[serde(default)]
    pub ictal_channels: Vec<ChannelLabel>,
    /// Written to the sidecar verbatim. Empty means "the ictal channels".
    #[serde(default)]
    pub clinician_selected: String,
    #[serde(default = "default_band")]
    pub ictal_band: (f64, f64),
    #[serde(default = "default_ratio")]
    pub ictal_amplitude_ratio: f64,
    #[serde(default)]
    pub modulation: Modulation,
    /// Per-channel delay of burst onset, seconds.
    #[serde(default)]
    pub propagation: BTreeMap<ChannelLabel, f64>,
    /// Ictal activity starts this long before the annotated onset.
    #[serde(default)]
    pub onset_lead_s: f64,
    #[serde(default = "default_noise_rms")]
    pub noise_rms: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    /// Reads a spec and resolves a relative montage path against the spec's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_json(&text)?;
        if let MontageSource::Path(p) = &spec.montage {
            if p.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                spec.montage = MontageSource::Path(base.join(p));
            }
        }
        Ok(spec)
    }

    pub fn montage(&self) -> Result<Montage> {
        match &self.montage {
            MontageSource::Inline(file) => Montage::from_file_data(file),
            MontageSource::Path(path) => Montage::load(path),
        }
    }

    pub fn validate(&self, montage: &Montage) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if !(self.fs > 2.0 * ANALYSIS_MAX_HZ) || !self.fs.is_finite() {
            return bad(format!("fs must exceed {} Hz, got {}", 2.0 * ANALYSIS_MAX_HZ, self.fs));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        for s in &self.seizures {
            if !(0.0 <= s.onset_s && s.onset_s < s.offset_s && s.offset_s <= self.duration_s) {
                return bad(format!(
                    "seizure [{}, {}] is outside [0, {}]",
                    s.onset_s, s.offset_s, self.duration_s
                ));
            }
        }
        for c in &self.ictal_channels {
            if !montage.contains(c) {
                return bad(format!("ictal channel {c} is not in the montage"));
            }
        }
        for (c, lag) in &self.propagation {
            if !montage.contains(c) {
                return bad(format!("propagation channel {c} is not in the montage"));
            }
            if !(*lag >= 0.0) {
                return bad(format!("propagation lag for {c} must be non-negative"));
            }
        }
        let (lo, hi) = self.ictal_band;
        if !(0.0 < lo && lo <= hi && hi < self.fs / 2.0) {
            return bad(format!("ictal_band ({lo}, {hi}) must satisfy 0 < low <= high < fs/2"));
        }
        if !(self.ictal_amplitude_ratio > 1.0) {
            return bad(format!(
                "ictal_amplitude_ratio must exceed 1, got {}",
                self.ictal_amplitude_ratio
            ));
        }
        self.modulation.validate()?;
        if !(self.onset_lead_s >= 0.0) {
            return bad("onset_lead_s must be non-negative".into());
        }
        if !(self.noise_rms > 0.0) {
            return bad("noise_rms must be positive".into());
        }
        Ok(())
    }

    fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }
}

/// What was planted, for checking a pipeline's output against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ictal_channels: Vec<ChannelLabel>,
    pub seizures: Vec<SeizureWindow>,
    pub ictal_band: (f64, f64),
    pub ictal_amplitude_ratio: f64,
    pub modulation: Modulation,
    pub propagation: BTreeMap<ChannelLabel, f64>,
    pub onset_lead_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub montage: Montage,
    pub recording: Recording,
    pub annotations: Vec<SeizureAnnotation>,
    pub sidecar: Sidecar,
    pub ground_truth: GroundTruth,
}

/// Unit-variance white noise through Paul Kellet's pink filter, mean
/// removed and scaled to `rms`.
fn pink_noise(rng: &mut ChaCha8Rng, n: usize, rms: f64) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out = Vec::with_capacity(n);
    for i in 0..n + BURN_IN {
        let white: f64 = rng.sample(StandardNormal);
        b[0] = 0.99886 * b[0] + white * 0.055_517_9;
        b[1] = 0.99332 * b[1] + white * 0.075_075_9;
        b[2] = 0.96900 * b[2] + white * 0.153_852_0;
        b[3] = 0.86650 * b[3] + white * 0.310_485_6;
        b[4] = 0.55000 * b[4] + white * 0.532_952_2;
        b[5] = -0.7616 * b[5] - white * 0.016_898_0;
        let pink = b[..6].iter().sum::<f64>() + b[6] + white * 0.5362;
        b[6] = white * 0.115_926;
        if i >= BURN_IN {
            out.push(pink);
        }
    }
    normalize(&mut out, rms);
    out
}

fn normalize(x: &mut [f64], rms: f64) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let power = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
    let scale = if power > 0.0 { rms / power.sqrt() } else { 0.0 };
    for v in x {
        *v = (*v - mean) * scale;
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Down-chirp through `band` with amplitude envelope `env` and tapered ends,
/// scaled to RMS `target`.
fn burst(n: usize, fs: f64, band: (f64, f64), env: impl Fn(f64) -> f64, phase0: f64, target: f64) -> Vec<f64> {
    let duration = n as f64 / fs;
    let (lo, hi) = band;
    let ramp = (RAMP_S * fs).min(n as f64 / 2.0);
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let tau = i as f64 / fs;
            // instantaneous frequency hi -> lo, integrated for the phase
            let phase = 2.0 * PI * (hi * tau - (hi - lo) * tau * tau / (2.0 * duration.max(1e-12)));
            let am = env(tau);
            let pos = i as f64;
            let taper = if ramp > 0.0 && pos < ramp {
                0.5 - 0.5 * (PI * pos / ramp).cos()
            } else if ramp > 0.0 && (n as f64 - 1.0 - pos) < ramp {
                0.5 - 0.5 * (PI * (n as f64 - 1.0 - pos) / ramp).cos()
            } else {
                1.0
            };
            am * taper * (phase + phase0).sin()
        })
        .collect();
    let current = rms(&out);
    if current > 0.0 {
        for v in &mut out {
            *v *= target / current;
        }
    }
    out
}

/// Sample range `[start, end)` carrying ictal activity on a channel with
/// `lag` for the given seizure.
pub fn ictal_span(spec: &SynthSpec, seizure: &SeizureWindow, lag: f64) -> (usize, usize) {
    let n = spec.n_samples();
    let start_s = (seizure.onset_s - spec.onset_lead_s + lag).max(0.0);
    let start = ((start_s * spec.fs).round() as usize).min(n);
    let end = ((seizure.offset_s * spec.fs).round() as usize).min(n);
    (start, end.max(start))
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    let montage = spec.montage()?;
    spec.validate(&montage)?;
    let n = spec.n_samples();
    let labels = montage.channels();
    let mut columns = Vec::with_capacity(labels.len());
    for (k, label) in labels.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, k as u64 + 1));
        let mut x = pink_noise(&mut rng, n, spec.noise_rms);
        if let Some(j) = spec.ictal_channels.iter().position(|c| c == label) {
            let lag = spec.propagation.get(label).copied().unwrap_or(0.0);
            for seizure in &spec.seizures {
                let (start, end) = ictal_span(spec, seizure, lag);
                let phase0 = rng.random::<f64>() * 2.0 * PI;
                let wave = burst(
                    end - start,
                    spec.fs,
                    spec.ictal_band,
                    |tau| spec.modulation.envelope(tau, j, spec.ictal_channels.len()),
                    phase0,
                    spec.ictal_amplitude_ratio * spec.noise_rms,
                );
                for (v, w) in x[start..end].iter_mut().zip(wave) {
                    *v += w;
                }
            }
        }
        for v in &mut x {
            *v = round4(*v);
        }
        columns.push(x);
    }
    let recording = Recording::new(columns, spec.fs, labels)?;
    let annotations = validate_annotations(
        spec.seizures
            .iter()
            .enumerate()
            .map(|(i, s)| SeizureAnnotation {
                onset_s: s.onset_s,
                offset_s: s.offset_s,
                label: format!("sz{}", i + 1),
            })
            .collect(),
        recording.duration_s(),
    )?;
    let clinician_selected = if spec.clinician_selected.trim().is_empty() {
        spec.ictal_channels
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    } else {
        spec.clinician_selected.clone()
    };
    let sidecar = Sidecar {
        sampling_rate_hz: spec.fs,
        unit: "uV".to_string(),
        annotations: annotations.clone(),
        clinician_selected,
    };
    let ground_truth = GroundTruth {
        ictal_channels: spec.ictal_channels.clone(),
        seizures: spec.seizures.clone(),
        ictal_band: spec.ictal_band,
        ictal_amplitude_ratio: spec.ictal_amplitude_ratio,
        modulation: spec.modulation,
        propagation: spec.propagation.clone(),
        onset_lead_s: spec.onset_lead_s,
        seed: spec.seed,
    };
    Ok(SynthOutput {
        montage,
        recording,
        annotations,
        sidecar,
        ground_truth,
    })
}

/// Output file names inside the target directory.
pub const SIGNAL_FILE: &str = "signal.csv";
pub const SIDECAR_FILE: &str = "sidecar.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const MONTAGE_FILE: &str = "montage.json";

impl SynthOutput {
    /// Writes signal, sidecar, ground truth and montage files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let signal = dir.join(SIGNAL_FILE);
        write_signal_csv(&signal, &self.recording)?;
        let sidecar = dir.join(SIDECAR_FILE);
        write_sidecar(&sidecar, &self.sidecar)?;
        let truth = dir.join(GROUND_TRUTH_FILE);
        write_json(&truth, &self.ground_truth)?;
        let montage = dir.join(MONTAGE_FILE);
        write_json(&montage, &self.montage.to_file_data())?;
        Ok(vec![signal, sidecar, truth, montage])
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
