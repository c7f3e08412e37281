//! Labeled frame datasets (PPS vs non-seizure), stratified splits and folds.

use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{ChannelFeatureBlock, FrameSpec};
use crate::error::{Error, Result};
use crate::ingest::SeizureAnnotation;
use crate::montage::ChannelLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "NONSEIZURE")]
    NonSeizure,
    /// Pre-seizure plus seizure.
    #[serde(rename = "PPS")]
    Pps,
}

impl Label {
    pub fn is_pps(self) -> bool {
        self == Label::Pps
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pps => "PPS",
            Label::NonSeizure => "NONSEIZURE",
        }
    }
}

/// Seizure interval extended backwards by the PPS margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsWindow {
    pub start_s: f64,
    pub end_s: f64,
}

/// One window per annotation, `[max(0, onset - ext), offset]`, with
/// overlapping windows merged.
pub fn pps_windows(annotations: &[SeizureAnnotation], extension_s: f64) -> Vec<PpsWindow> {
    let mut windows: Vec<PpsWindow> = annotations
        .iter()
        .map(|a| PpsWindow {
            start_s: (a.onset_s - extension_s).max(0.0),
            end_s: a.offset_s,
        })
        .collect();
    windows.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<PpsWindow> = Vec::with_capacity(windows.len());
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.start_s <= last.end_s => last.end_s = last.end_s.max(w.end_s),
            _ => merged.push(w),
        }
    }
    merged
}

/// A frame is PPS when its interval overlaps any PPS window by a positive amount.
pub fn label_frames(annotations: &[SeizureAnnotation], extension_s: f64, spec: &FrameSpec, fs: f64) -> Vec<Label> {
    let windows = pps_windows(annotations, extension_s);
    (0..spec.n_frames)
        .map(|t| {
            let (start, end) = (spec.start_s(t, fs), spec.end_s(t, fs));
            if windows.iter().any(|w| start < w.end_s && end > w.start_s) {
                Label::Pps
            } else {
                Label::NonSeizure
            }
        })
        .collect()
}

/// Featurized frames with one contiguous column range per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDataset {
    x: Vec<f64>,
    n_features: usize,
    y: Vec<Label>,
    frame_times: Vec<f64>,
    frame_indices: Vec<usize>,
    channels: Vec<ChannelLabel>,
    channel_columns: Vec<Range<usize>>,
    feature_names: Vec<String>,
    frame_spec: FrameSpec,
}

impl FrameDataset {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.n_features.max(1))
    }

    pub fn labels(&self) -> &[Label] {
        &self.y
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    /// Frame index in the source recording for each row.
    pub fn frame_indices(&self) -> &[usize] {
        &self.frame_indices
    }

    pub fn channels(&self) -> &[ChannelLabel] {
        &self.channels
    }

    pub fn channel_columns(&self) -> &[Range<usize>] {
        &self.channel_columns
    }

    pub fn columns_of(&self, channel: &ChannelLabel) -> Option<Range<usize>> {
        self.channels
            .iter()
            .position(|c| c == channel)
            .map(|i| self.channel_columns[i].clone())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn frame_spec(&self) -> &FrameSpec {
        &self.frame_spec
    }

    pub fn count(&self, label: Label) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    /// Row subset in the given order.
    pub fn subset(&self, rows: &[usize]) -> FrameDataset {
        let mut x = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            x.extend_from_slice(self.row(r));
        }
        FrameDataset {
            x,
            n_features: self.n_features,
            y: rows.iter().map(|&r| self.y[r]).collect(),
            frame_times: rows.iter().map(|&r| self.frame_times[r]).collect(),
            frame_indices: rows.iter().map(|&r| self.frame_indices[r]).collect(),
            channels: self.channels.clone(),
            channel_columns: self.channel_columns.clone(),
            feature_names: self.feature_names.clone(),
            frame_spec: self.frame_spec,
        }
    }

    /// Row indices carrying `label`, ascending.
    pub fn rows_with(&self, label: Label) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.y[i] == label).collect()
    }

    /// CSV dump: feature columns, then `label` and `frame_start_s`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.extend(["label", "frame_start_s"]);
        writer.write_record(&header).map_err(|e| Error::parse(path, e))?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = self.row(i).iter().map(f64::to_string).collect();
            record.push(self.y[i].as_str().to_string());
            record.push(self.frame_times[i].to_string());
            writer.write_record(&record).map_err(|e| Error::parse(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

/// Concatenates channel blocks column-wise, in block order.
pub fn assemble(blocks: &[ChannelFeatureBlock], labels: &[Label], spec: &FrameSpec, fs: f64) -> Result<FrameDataset> {
    let first = blocks.first().ok_or(Error::EmptyDataset)?;
    let n_frames = first.n_frames;
    for block in blocks {
        if block.n_frames != n_frames {
            return Err(Error::FrameCountMismatch {
                expected: n_frames,
                found: block.n_frames,
                channel: block.channel.to_string(),
            });
        }
    }
    if labels.len() != n_frames {
        return Err(Error::FrameCountMismatch {
            expected: n_frames,
            found: labels.len(),
            channel: "labels".into(),
        });
    }

    let mut channel_columns = Vec::with_capacity(blocks.len());
    let mut feature_names = Vec::new();
    let mut offset = 0;
    for block in blocks {
        channel_columns.push(offset..offset + block.n_features());
        offset += block.n_features();
        feature_names.extend(block.feature_names.iter().cloned());
    }
    let n_features = offset;
    let mut x = Vec::with_capacity(n_frames * n_features);
    for t in 0..n_frames {
        for block in blocks {
            x.extend_from_slice(block.row(t));
        }
    }
    Ok(FrameDataset {
        x,
        n_features,
        y: labels.to_vec(),
        frame_times: (0..n_frames).map(|t| spec.start_s(t, fs)).collect(),
        frame_indices: (0..n_frames).collect(),
        channels: blocks.iter().map(|b| b.channel.clone()).collect(),
        channel_columns,
        feature_names,
        frame_spec: *spec,
    })
}

fn shuffled_classes(labels: &[Label], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pps: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_pps()).collect();
    let mut non: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_pps()).collect();
    if pps.is_empty() || non.is_empty() {
        return Err(Error::SingleClassDataset);
    }
    pps.shuffle(&mut rng);
    non.shuffle(&mut rng);
    Ok((pps, non))
}

/// Train/test row indices (each ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified random split. The test set gets `round(n * f)` rows, of which
/// `floor(n_minority * f)` (at least one) come from the minority class and
/// the remainder from the majority class.
pub fn split(labels: &[Label], test_fraction: f64, seed: u64) -> Result<Split> {
    let (pps, non) = shuffled_classes(labels, seed)?;
    let (minority, majority) = if pps.len() <= non.len() {
        (&pps, &non)
    } else {
        (&non, &pps)
    };
    let n = labels.len();
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let cap = |count: usize| if count >= 2 { count - 1 } else { count };
    let minority_test = ((minority.len() as f64 * test_fraction + 1e-9).floor() as usize).clamp(1, cap(minority.len()));
    let majority_test = n_test.saturating_sub(minority_test).clamp(1, cap(majority.len()));

    let mut test: Vec<usize> = minority[..minority_test]
        .iter()
        .chain(&majority[..majority_test])
        .copied()
        .collect();
    let mut train: Vec<usize> = minority[minority_test..]
        .iter()
        .chain(&majority[majority_test..])
        .copied()
        .collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified k folds: each class is shuffled and dealt round-robin, the
/// deal continuing across classes so fold sizes differ by at most one.
pub fn cv_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 || k > labels.len() {
        return Err(Error::Config(format!(
            "cannot make {k} folds from {} rows",
            labels.len()
        )));
    }
    let (pps, non) = shuffled_classes(labels, seed)?;
    let mut folds = vec![Vec::new(); k];
    for (pos, &row) in pps.iter().chain(&non).enumerate() {
        folds[pos % k].push(row);
    }
    Ok((0..k)
        .map(|f| {
            let mut test = folds[f].clone();
            test.sort_unstable();
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            train.sort_unstable();
            Split { train, test }
        })
        .collect())
}
