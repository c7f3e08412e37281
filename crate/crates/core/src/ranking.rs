//! Channel ranking, the elbow cutoff, and the clinician / electrode / zone
//! extension workflow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ShapEngine};
use crate::dataset::{assemble, label_frames, split, FrameDataset, Label};
use crate::dsp::featurize;
use crate::error::{Error, Result};
use crate::gbdt::{cross_validate, evaluate, fit, CvReport, GbdtModel, Metrics};
use crate::ingest::{check_annotation_framing, restrict_channels, Recording, SeizureAnnotation};
use crate::montage::{ChannelLabel, Montage};
use crate::shapley::{
    check_against_exact, mean_importance, shap_sequence, BackgroundSet, ChannelImportance, CoalitionPlayers,
    EngineCheck, ShapFrameVector, ShapSettings,
};

/// Frames compared against enumeration when a non-exact engine is used.
const ENGINE_CHECK_FRAMES: usize = 8;

/// Channels by mean SHAP, descending; ties by label (electrode, then index).
pub fn rank(importance: &ChannelImportance) -> Vec<(ChannelLabel, f64)> {
    let mut pairs: Vec<(ChannelLabel, f64)> = importance
        .players
        .iter()
        .cloned()
        .zip(importance.mean.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowResult {
    pub order: Vec<ChannelLabel>,
    pub values: Vec<f64>,
    /// 1-based.
    pub k_star: usize,
    pub selected: Vec<ChannelLabel>,
    /// `d_k` for `k = 2..=K-1`.
    pub second_diffs: Vec<f64>,
}

/// Second differences of a descending sequence and the 1-based elbow index.
/// Sequences shorter than three keep every element.
pub fn elbow_index(sorted_values: &[f64]) -> (usize, Vec<f64>) {
    let k = sorted_values.len();
    if k < 3 {
        return (k, Vec::new());
    }
    let diffs: Vec<f64> = sorted_values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let mut best = 0;
    for (i, &d) in diffs.iter().enumerate() {
        if d > diffs[best] {
            best = i;
        }
    }
    (best + 2, diffs)
}

/// Elbow cut of a ranked list. Inclusive keeps the top `k*`; otherwise the
/// top `k* - 1` (at least one).
pub fn elbow(ranked: &[(ChannelLabel, f64)], inclusive: bool) -> ElbowResult {
    let values: Vec<f64> = ranked.iter().map(|(_, v)| *v).collect();
    let (k_star, second_diffs) = elbow_index(&values);
    let keep = if inclusive || k_star <= 1 { k_star } else { k_star - 1 };
    let order: Vec<ChannelLabel> = ranked.iter().map(|(c, _)| c.clone()).collect();
    ElbowResult {
        selected: order[..keep].to_vec(),
        order,
        values,
        k_star,
        second_diffs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Clinician,
    Electrode,
    Zone,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Clinician, Stage::Electrode, Stage::Zone];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Clinician => "clinician",
            Stage::Electrode => "electrode",
            Stage::Zone => "zone",
        }
    }

    /// Channel set analyzed at this stage.
    pub fn channels(self, montage: &Montage, clinician: &[ChannelLabel]) -> Result<Vec<ChannelLabel>> {
        match self {
            Stage::Clinician => {
                for c in clinician {
                    montage.resolve(c)?;
                }
                Ok(clinician.to_vec())
            }
            Stage::Electrode => montage.electrode_extension(clinician),
            Stage::Zone => montage.zone_extension(clinician),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clinician" => Ok(Stage::Clinician),
            "electrode" => Ok(Stage::Electrode),
            "zone" => Ok(Stage::Zone),
            other => Err(Error::Config(format!("unknown stage {other:?}"))),
        }
    }
}

/// Featurized, labeled frames for a channel subset of a recording.
pub fn build_dataset(
    rec: &Recording,
    annotations: &[SeizureAnnotation],
    channels: &[ChannelLabel],
    cfg: &RunConfig,
) -> Result<FrameDataset> {
    if channels.is_empty() {
        return Err(Error::Domain("empty channel set".into()));
    }
    cfg.validate()?;
    check_annotation_framing(annotations, rec.duration_s(), cfg.frame_len_s)?;
    let rec = restrict_channels(rec, channels)?;
    let (spec, blocks) = featurize(&rec, cfg)?;
    let labels = label_frames(annotations, cfg.pps_extension_s, &spec, rec.sampling_rate());
    let ds = assemble(&blocks, &labels, &spec, rec.sampling_rate())?;
    if ds.count(Label::Pps) == 0 || ds.count(Label::NonSeizure) == 0 {
        return Err(Error::SingleClassDataset);
    }
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedChannel {
    pub channel: ChannelLabel,
    pub mean_shap: f64,
    pub clinician_selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub n_channels: usize,
    pub channels: Vec<ChannelLabel>,
    pub n_frames: usize,
    pub n_pps_frames: usize,
    pub mean_f1: f64,
    pub cv: CvReport,
    pub holdout: Metrics,
    pub shap_engine: ShapEngine,
    pub n_background: usize,
    pub engine_check: Option<EngineCheck>,
    pub ranking: Vec<RankedChannel>,
    pub elbow: ElbowResult,
    pub new_findings: Vec<ChannelLabel>,
}

/// A stage report plus the per-frame attributions behind it.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub report: StageReport,
    pub importance: ChannelImportance,
    pub attributions: Vec<ShapFrameVector>,
    pub model: GbdtModel,
}

/// restrict, featurize, label, cross-validate, fit on the training split,
/// explain every PPS frame, rank and cut.
pub fn run_stage(
    rec: &Recording,
    annotations: &[SeizureAnnotation],
    montage: &Montage,
    stage: Stage,
    channels: &[ChannelLabel],
    clinician: &[ChannelLabel],
    cfg: &RunConfig,
) -> Result<StageOutcome> {
    for c in channels {
        montage.resolve(c)?;
    }
    let ds = build_dataset(rec, annotations, channels, cfg)?;
    log::info!(
        "stage {stage}: {} channels, {} frames ({} PPS)",
        channels.len(),
        ds.n_rows(),
        ds.count(Label::Pps)
    );
    let cv = cross_validate(&ds, cfg)?;
    let holdout_split = split(ds.labels(), cfg.test_fraction, cfg.seed)?;
    let train = ds.subset(&holdout_split.train);
    let model = fit(&train, cfg)?;
    let holdout = evaluate(&model, &ds.subset(&holdout_split.test))?;

    let players = CoalitionPlayers::from_dataset(&ds)?;
    let background = BackgroundSet::draw(&train, cfg.background_size, cfg.seed)?;
    let settings = ShapSettings::from_config(cfg);
    let pps_rows = ds.rows_with(Label::Pps);
    let attributions = shap_sequence(&model, &ds, &pps_rows, &players, &background, &settings)?;
    let engine_check = check_against_exact(
        &model,
        &ds,
        &pps_rows,
        &attributions,
        &players,
        &background,
        &settings,
        ENGINE_CHECK_FRAMES,
    )?;
    if let Some(check) = &engine_check {
        log::warn!(
            "stage {stage}: {:?} engine deviates from enumeration by up to {:.3e}",
            check.engine,
            check.max_abs_deviation
        );
    }
    let importance = mean_importance(&attributions, players.players())?;
    let ranked = rank(&importance);
    let elbow = elbow(&ranked, cfg.elbow_inclusive);
    let new_findings = elbow
        .selected
        .iter()
        .filter(|c| !clinician.contains(c))
        .cloned()
        .collect();

    let report = StageReport {
        stage,
        n_channels: channels.len(),
        channels: channels.to_vec(),
        n_frames: ds.n_rows(),
        n_pps_frames: pps_rows.len(),
        mean_f1: cv.mean_f1,
        cv,
        holdout,
        shap_engine: settings.resolve(players.n()),
        n_background: background.len(),
        engine_check,
        ranking: ranked
            .into_iter()
            .map(|(channel, mean_shap)| RankedChannel {
                clinician_selected: clinician.contains(&channel),
                channel,
                mean_shap,
            })
            .collect(),
        elbow,
        new_findings,
    };
    Ok(StageOutcome {
        report,
        importance,
        attributions,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub clinician_selected: Vec<ChannelLabel>,
    pub config: RunConfig,
    pub stages: Vec<StageReport>,
}

impl ExtensionReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct WorkflowOutput {
    pub report: ExtensionReport,
    pub outcomes: Vec<StageOutcome>,
}

/// Runs the requested stages in clinician, electrode, zone order.
pub fn run_workflow(
    rec: &Recording,
    annotations: &[SeizureAnnotation],
    montage: &Montage,
    clinician: &[ChannelLabel],
    cfg: &RunConfig,
    stages: &[Stage],
) -> Result<WorkflowOutput> {
    cfg.validate()?;
    if clinician.is_empty() {
        return Err(Error::Domain("no clinician-selected channels".into()));
    }
    let mut wanted = stages.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let mut outcomes = Vec::with_capacity(wanted.len());
    for stage in wanted {
        let channels = stage.channels(montage, clinician)?;
        outcomes.push(run_stage(rec, annotations, montage, stage, &channels, clinician, cfg)?);
    }
    Ok(WorkflowOutput {
        report: ExtensionReport {
            clinician_selected: clinician.to_vec(),
            config: cfg.clone(),
            stages: outcomes.iter().map(|o| o.report.clone()).collect(),
        },
        outcomes,
    })
}

/// Cross-validated F1 for one channel set, without attribution.
pub fn eval_stage(
    rec: &Recording,
    annotations: &[SeizureAnnotation],
    channels: &[ChannelLabel],
    cfg: &RunConfig,
) -> Result<CvReport> {
    let ds = build_dataset(rec, annotations, channels, cfg)?;
    cross_validate(&ds, cfg)
}
