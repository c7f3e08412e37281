//! Channel-level Shapley attribution of the model's raw margin.
//!
//! Players are channels: every feature column of a channel enters or leaves
//! a coalition together. A coalition `S` is scored by interventional
//! masking, `f(S) = mean_b margin(z_b)`, where `z_b` takes the explained
//! frame's values on the columns of players in `S` and background row `b`'s
//! values everywhere else. Background rows are non-seizure frames.
//!
//! Three engines produce per-frame values:
//! * exact enumeration over a memoized table of all `2^n` coalition values,
//! * a tree-path traversal that gives the same values from the tree
//!   structure without enumerating coalitions,
//! * seeded permutation sampling, for games too large for either.

pub mod exact;
mod permutation;
mod table;
mod tree_path;

use std::cell::Cell;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

pub use exact::{coalition_weight, exact_shapley, shapley_from_table, subset_table, CoalitionGame};
pub use permutation::permutation_shapley;
pub use table::masked_margin_table;
pub use tree_path::tree_path_shapley;

use crate::config::{RunConfig, ShapEngine};
use crate::dataset::{FrameDataset, Label};
use crate::error::{Error, Result};
use crate::gbdt::GbdtModel;
use crate::montage::ChannelLabel;
use crate::seed::derive_seed;

/// Most players a coalition bitmask can hold.
pub const MAX_PLAYERS: usize = 64;

/// The player set `N` and the feature columns each player owns.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPlayers {
    players: Vec<ChannelLabel>,
    columns: Vec<Range<usize>>,
    player_of: Vec<usize>,
}

impl CoalitionPlayers {
    /// `columns` must partition `0..n_features`.
    pub fn new(players: Vec<ChannelLabel>, columns: Vec<Range<usize>>, n_features: usize) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::Domain("empty player set".into()));
        }
        if players.len() > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                n: players.len(),
                max: MAX_PLAYERS,
            });
        }
        if players.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: players.len(),
                found: columns.len(),
            });
        }
        let mut player_of = vec![usize::MAX; n_features];
        for (p, range) in columns.iter().enumerate() {
            for j in range.clone() {
                match player_of.get_mut(j) {
                    Some(slot) if *slot == usize::MAX => *slot = p,
                    _ => return Err(Error::Domain(format!("column {j} is out of range or owned twice"))),
                }
            }
        }
        if let Some(j) = player_of.iter().position(|&p| p == usize::MAX) {
            return Err(Error::Domain(format!("column {j} has no owning player")));
        }
        Ok(Self {
            players,
            columns,
            player_of,
        })
    }

    pub fn from_dataset(ds: &FrameDataset) -> Result<Self> {
        Self::new(ds.channels().to_vec(), ds.channel_columns().to_vec(), ds.n_features())
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn n_features(&self) -> usize {
        self.player_of.len()
    }

    pub fn players(&self) -> &[ChannelLabel] {
        &self.players
    }

    pub fn columns(&self) -> &[Range<usize>] {
        &self.columns
    }

    /// Owning player of each feature column.
    pub fn player_of(&self) -> &[usize] {
        &self.player_of
    }

    pub fn full_coalition(&self) -> u64 {
        if self.n() == 64 {
            u64::MAX
        } else {
            (1u64 << self.n()) - 1
        }
    }
}

/// Reference frames standing in for "absent" players.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    values: Vec<f64>,
    n_features: usize,
    source_rows: Vec<usize>,
}

impl BackgroundSet {
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Domain("empty background set".into()))?;
        let n_features = first.len();
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            values,
            n_features,
            source_rows: (0..rows.len()).collect(),
        })
    }

    /// Up to `size` non-seizure rows of `ds`, chosen by a seeded shuffle and
    /// kept in ascending row order.
    pub fn draw(ds: &FrameDataset, size: usize, seed: u64) -> Result<Self> {
        let mut candidates = ds.rows_with(Label::NonSeizure);
        if candidates.is_empty() || size == 0 {
            return Err(Error::Domain(
                "no non-seizure frames available for the background set".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        candidates.shuffle(&mut rng);
        candidates.truncate(size);
        candidates.sort_unstable();
        let rows: Vec<&[f64]> = candidates.iter().map(|&r| ds.row(r)).collect();
        let mut set = Self::from_rows(&rows)?;
        set.source_rows = candidates;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.source_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_rows.is_empty()
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.values[b * self.n_features..(b + 1) * self.n_features]
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        (0..self.len()).map(|b| self.row(b)).collect()
    }

    /// Rows of the originating dataset.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }
}

/// The masked-margin game for one explained frame.
pub struct MaskedGame<'a> {
    model: &'a GbdtModel,
    x: &'a [f64],
    players: &'a CoalitionPlayers,
    background: &'a BackgroundSet,
    evaluations: Cell<u64>,
}

impl<'a> MaskedGame<'a> {
    pub fn new(
        model: &'a GbdtModel,
        x: &'a [f64],
        players: &'a CoalitionPlayers,
        background: &'a BackgroundSet,
    ) -> Result<Self> {
        for found in [x.len(), players.n_features(), background.n_features] {
            if found != model.n_features {
                return Err(Error::DimensionMismatch {
                    expected: model.n_features,
                    found,
                });
            }
        }
        Ok(Self {
            model,
            x,
            players,
            background,
            evaluations: Cell::new(0),
        })
    }

    /// Masked model evaluations so far; each coalition costs one per
    /// background row.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.get()
    }

    fn margin_against(&self, coalition: u64, z: &[f64]) -> f64 {
        let x = self.x;
        let owner = self.players.player_of();
        self.model
            .margin_with(|j| if coalition >> owner[j] & 1 == 1 { x[j] } else { z[j] })
    }
}

impl CoalitionGame for MaskedGame<'_> {
    fn n_players(&self) -> usize {
        self.players.n()
    }

    fn value(&self, coalition: u64) -> f64 {
        let b = self.background.len();
        self.evaluations.set(self.evaluations.get() + b as u64);
        let total = (0..b).fold(0.0, |acc, i| {
            acc + self.margin_against(coalition, self.background.row(i))
        });
        total / b as f64
    }
}

/// `f(S)`: mean margin over background rows with players outside `S` masked.
pub fn masked_margin(
    model: &GbdtModel,
    frame_x: &[f64],
    subset: u64,
    players: &CoalitionPlayers,
    background: &BackgroundSet,
) -> Result<f64> {
    Ok(MaskedGame::new(model, frame_x, players, background)?.value(subset))
}

/// Attributions for one frame, in raw-margin units.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ShapFrameVector {
    pub t: usize,
    pub phi: Vec<f64>,
    pub f_full: f64,
    pub f_empty: f64,
}

impl ShapFrameVector {
    /// `sum(phi) - (f(N) - f(empty))`.
    pub fn efficiency_gap(&self) -> f64 {
        self.phi.iter().sum::<f64>() - (self.f_full - self.f_empty)
    }
}

/// Exact attributions from the complete table of `2^n` masked margins,
/// built once per frame and shared by every player.
pub fn exact_shap_frame(
    model: &GbdtModel,
    frame_x: &[f64],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
    max_players: usize,
) -> Result<ShapFrameVector> {
    // validates dimensions
    MaskedGame::new(model, frame_x, players, background)?;
    let max = max_players.min(exact::ENUMERATION_LIMIT);
    if players.n() > max {
        return Err(Error::TooManyPlayers { n: players.n(), max });
    }
    let table = masked_margin_table(model, frame_x, &background.rows(), players.player_of(), players.n());
    Ok(ShapFrameVector {
        t: 0,
        phi: shapley_from_table(&table, players.n()),
        f_full: table[table.len() - 1],
        f_empty: table[0],
    })
}

pub fn tree_shap_frame(
    model: &GbdtModel,
    frame_x: &[f64],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
) -> Result<ShapFrameVector> {
    let game = MaskedGame::new(model, frame_x, players, background)?;
    let rows = background.rows();
    Ok(ShapFrameVector {
        t: 0,
        phi: tree_path_shapley(model, frame_x, &rows, players.player_of(), players.n()),
        f_full: model.margin_unchecked(frame_x),
        f_empty: game.value(0),
    })
}

pub fn permutation_shap_frame(
    model: &GbdtModel,
    frame_x: &[f64],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapFrameVector> {
    let game = MaskedGame::new(model, frame_x, players, background)?;
    Ok(ShapFrameVector {
        t: 0,
        phi: permutation_shapley(&game, n_permutations, seed),
        f_full: model.margin_unchecked(frame_x),
        f_empty: game.value(0),
    })
}

/// Engine choice and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapSettings {
    pub engine: ShapEngine,
    pub max_exact_players: usize,
    pub n_permutations: usize,
    pub seed: u64,
}

impl ShapSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            engine: cfg.shap_engine,
            max_exact_players: cfg.exact_shap_max_players,
            n_permutations: cfg.n_permutations,
            seed: cfg.seed,
        }
    }

    /// Concrete engine for `n` players.
    pub fn resolve(&self, n: usize) -> ShapEngine {
        match self.engine {
            ShapEngine::Auto if n <= self.max_exact_players.min(exact::ENUMERATION_LIMIT) => ShapEngine::Exact,
            ShapEngine::Auto => ShapEngine::TreePath,
            other => other,
        }
    }
}

pub fn shap_frame(
    model: &GbdtModel,
    frame_x: &[f64],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
    settings: &ShapSettings,
    t: usize,
) -> Result<ShapFrameVector> {
    let mut v = match settings.resolve(players.n()) {
        ShapEngine::Exact | ShapEngine::Auto => {
            exact_shap_frame(model, frame_x, players, background, settings.max_exact_players)?
        }
        ShapEngine::TreePath => tree_shap_frame(model, frame_x, players, background)?,
        ShapEngine::Permutation => permutation_shap_frame(
            model,
            frame_x,
            players,
            background,
            settings.n_permutations,
            derive_seed(settings.seed, t as u64),
        )?,
    };
    v.t = t;
    Ok(v)
}

/// Per-frame attributions for the given dataset rows, ordered as `rows`.
/// `t` of each vector is the row's frame index in the source recording.
pub fn shap_sequence(
    model: &GbdtModel,
    ds: &FrameDataset,
    rows: &[usize],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
    settings: &ShapSettings,
) -> Result<Vec<ShapFrameVector>> {
    let work = |&r: &usize| shap_frame(model, ds.row(r), players, background, settings, ds.frame_indices()[r]);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_iter().map(work).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.iter().map(work).collect()
    }
}

/// Mean attribution per player over a frame sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelImportance {
    pub players: Vec<ChannelLabel>,
    pub mean: Vec<f64>,
    pub n_frames: usize,
}

impl ChannelImportance {
    pub fn get(&self, label: &ChannelLabel) -> Option<f64> {
        self.players.iter().position(|p| p == label).map(|i| self.mean[i])
    }
}

pub fn mean_importance(seq: &[ShapFrameVector], players: &[ChannelLabel]) -> Result<ChannelImportance> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut sum = vec![0.0; players.len()];
    for v in seq {
        if v.phi.len() != players.len() {
            return Err(Error::DimensionMismatch {
                expected: players.len(),
                found: v.phi.len(),
            });
        }
        for (s, p) in sum.iter_mut().zip(&v.phi) {
            *s += p;
        }
    }
    let t = seq.len() as f64;
    Ok(ChannelImportance {
        players: players.to_vec(),
        mean: sum.into_iter().map(|s| s / t).collect(),
        n_frames: seq.len(),
    })
}

/// How far a non-exact engine strayed from enumeration on a frame sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineCheck {
    pub engine: ShapEngine,
    pub frames_checked: usize,
    pub max_abs_deviation: f64,
}

/// Compares `seq` against exact enumeration on up to `max_frames` frames.
/// Returns `None` when the sequence is already exact or the player count is
/// above the enumeration cap.
#[allow(clippy::too_many_arguments)]
pub fn check_against_exact(
    model: &GbdtModel,
    ds: &FrameDataset,
    rows: &[usize],
    seq: &[ShapFrameVector],
    players: &CoalitionPlayers,
    background: &BackgroundSet,
    settings: &ShapSettings,
    max_frames: usize,
) -> Result<Option<EngineCheck>> {
    let engine = settings.resolve(players.n());
    if engine == ShapEngine::Exact || players.n() > settings.max_exact_players.min(exact::ENUMERATION_LIMIT) {
        return Ok(None);
    }
    let mut worst: f64 = 0.0;
    let checked = rows.len().min(max_frames).min(seq.len());
    for (&r, approx) in rows.iter().zip(seq).take(checked) {
        let exact = exact_shap_frame(model, ds.row(r), players, background, settings.max_exact_players)?;
        for (a, e) in approx.phi.iter().zip(&exact.phi) {
            worst = worst.max((a - e).abs());
        }
    }
    Ok(Some(EngineCheck {
        engine,
        frames_checked: checked,
        max_abs_deviation: worst,
    }))
}

struct PhiMap<'a> {
    players: &'a [ChannelLabel],
    phi: &'a [f64],
}

impl Serialize for PhiMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.players.len()))?;
        for (p, v) in self.players.iter().zip(self.phi) {
            map.serialize_entry(&p.to_string(), v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct AttributionRecord<'a> {
    t: usize,
    phi: PhiMap<'a>,
    f_full: f64,
    f_empty: f64,
}

/// One JSON object per frame: `{"t", "phi": {label: value}, "f_full", "f_empty"}`.
pub fn to_ndjson(seq: &[ShapFrameVector], players: &[ChannelLabel]) -> String {
    let mut out = String::new();
    for v in seq {
        let record = AttributionRecord {
            t: v.t,
            phi: PhiMap { players, phi: &v.phi },
            f_full: v.f_full,
            f_empty: v.f_empty,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_ndjson(path: &Path, seq: &[ShapFrameVector], players: &[ChannelLabel]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(to_ndjson(seq, players).as_bytes())
        .map_err(|e| Error::io(path, e))
}
