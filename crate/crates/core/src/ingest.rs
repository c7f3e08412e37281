//! Recording ingestion from the CSV + JSON sidecar interchange format.
//!
//! The signal CSV has one header row of channel labels and one row per
//! sample. The sidecar carries the sampling rate, amplitude unit, seizure
//! annotations and the clinician's channel selection:
//!
//! ```json
//! {"sampling_rate_hz": 1000, "unit": "uV",
//!  "annotations": [{"onset_s": 100.0, "offset_s": 140.0, "label": "sz1"}],
//!  "clinician_selected": "LA1-3, LB1-2, LC1-2"}
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montage::{expand_range, parse_channel_label, ChannelLabel, Montage};

/// Highest frequency of interest; recordings must sample above twice this.
pub const ANALYSIS_MAX_HZ: f64 = 60.0;

/// A multichannel recording stored column-wise (one vector per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    columns: Vec<Vec<f64>>,
    sampling_rate: f64,
    channel_labels: Vec<ChannelLabel>,
}

impl Recording {
    pub fn new(columns: Vec<Vec<f64>>, sampling_rate: f64, channel_labels: Vec<ChannelLabel>) -> Result<Self> {
        if columns.len() != channel_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: channel_labels.len(),
                found: columns.len(),
            });
        }
        let limit = 2.0 * ANALYSIS_MAX_HZ;
        if !(sampling_rate > limit) || !sampling_rate.is_finite() {
            return Err(Error::NyquistViolation {
                fs: sampling_rate,
                limit,
            });
        }
        let mut seen = HashSet::new();
        for label in &channel_labels {
            if !seen.insert(label) {
                return Err(Error::Schema(format!("duplicate channel {label}")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for (label, column) in channel_labels.iter().zip(&columns) {
            if column.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: column.len(),
                });
            }
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample {
                    channel: label.to_string(),
                    row,
                });
            }
        }
        Ok(Self {
            columns,
            sampling_rate,
            channel_labels,
        })
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn channel_labels(&self) -> &[ChannelLabel] {
        &self.channel_labels
    }

    pub fn n_channels(&self) -> usize {
        self.columns.len()
    }

    pub fn n_samples(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate
    }

    pub fn column(&self, channel: usize) -> &[f64] {
        &self.columns[channel]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_of(&self, label: &ChannelLabel) -> Option<&[f64]> {
        self.channel_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.columns[i].as_slice())
    }

    /// Sample at (row, channel).
    pub fn sample(&self, row: usize, channel: usize) -> f64 {
        self.columns[channel][row]
    }
}

/// Keeps the listed channels, in the listed order.
pub fn restrict_channels(rec: &Recording, keep: &[ChannelLabel]) -> Result<Recording> {
    let mut columns = Vec::with_capacity(keep.len());
    for label in keep {
        let column = rec
            .column_of(label)
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))?;
        columns.push(column.to_vec());
    }
    Recording::new(columns, rec.sampling_rate, keep.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeizureAnnotation {
    pub onset_s: f64,
    pub offset_s: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub sampling_rate_hz: f64,
    #[serde(default = "default_unit")]
    pub unit: String,
    #[serde(default)]
    pub annotations: Vec<SeizureAnnotation>,
    #[serde(default)]
    pub clinician_selected: String,
}

fn default_unit() -> String {
    "uV".to_string()
}

/// Everything read from one signal/sidecar pair.
#[derive(Debug, Clone)]
pub struct LoadedRecording {
    pub recording: Recording,
    pub annotations: Vec<SeizureAnnotation>,
    pub selected: Vec<ChannelLabel>,
    pub unit: String,
}

/// Sorts annotations by onset and checks `0 <= onset < offset <= duration`.
pub fn validate_annotations(
    mut annotations: Vec<SeizureAnnotation>,
    duration_s: f64,
) -> Result<Vec<SeizureAnnotation>> {
    for a in &annotations {
        if !(a.onset_s.is_finite() && a.offset_s.is_finite())
            || a.onset_s < 0.0
            || a.onset_s >= a.offset_s
            || a.offset_s > duration_s
        {
            return Err(Error::AnnotationOutOfBounds(format!(
                "{:?} [{}, {}] outside recording of {duration_s} s",
                a.label, a.onset_s, a.offset_s
            )));
        }
    }
    annotations.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    Ok(annotations)
}

/// Rejects annotations that start too close to the end to fit a single frame.
pub fn check_annotation_framing(annotations: &[SeizureAnnotation], duration_s: f64, frame_len_s: f64) -> Result<()> {
    match annotations.iter().find(|a| duration_s < a.onset_s + frame_len_s) {
        Some(a) => Err(Error::AnnotationOutOfBounds(format!(
            "{:?} onset {} s leaves less than one {frame_len_s} s frame in a {duration_s} s recording",
            a.label, a.onset_s
        ))),
        None => Ok(()),
    }
}

pub fn read_signal_csv(path: &Path, sampling_rate: f64, montage: &Montage) -> Result<Recording> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    let labels = headers.iter().map(parse_channel_label).collect::<Result<Vec<_>>>()?;
    for label in &labels {
        montage.resolve(label)?;
    }
    let mut columns = vec![Vec::new(); labels.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e))?;
        if record.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{}: row {row} has {} cells, expected {}",
                path.display(),
                record.len(),
                labels.len()
            )));
        }
        for (channel, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| Error::Schema(format!("{}: row {row}: {cell:?} is not a number", path.display())))?;
            if !value.is_finite() {
                return Err(Error::NonFiniteSample {
                    channel: labels[channel].to_string(),
                    row,
                });
            }
            columns[channel].push(value);
        }
    }
    Recording::new(columns, sampling_rate, labels)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn load_recording(signal_path: &Path, sidecar_path: &Path, montage: &Montage) -> Result<LoadedRecording> {
    let sidecar = read_sidecar(sidecar_path)?;
    let limit = 2.0 * ANALYSIS_MAX_HZ;
    if !(sidecar.sampling_rate_hz > limit) {
        return Err(Error::NyquistViolation {
            fs: sidecar.sampling_rate_hz,
            limit,
        });
    }
    let recording = read_signal_csv(signal_path, sidecar.sampling_rate_hz, montage)?;
    let annotations = validate_annotations(sidecar.annotations, recording.duration_s())?;
    let selected = expand_range(&sidecar.clinician_selected)?;
    for label in &selected {
        montage.resolve(label)?;
    }
    Ok(LoadedRecording {
        recording,
        annotations,
        selected,
        unit: sidecar.unit,
    })
}

pub fn write_signal_csv(path: &Path, rec: &Recording) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = rec
        .channel_labels
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let mut line = String::new();
    let result = (|| -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for row in 0..rec.n_samples() {
            line.clear();
            for (c, column) in rec.columns.iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                line.push_str(&column[row].to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
