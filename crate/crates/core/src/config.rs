//! Run configuration with defaults for every pipeline knob.

use serde::{Deserialize, Serialize};

use crate::dsp::Wavelet;
use crate::error::{Error, Result};

/// Gradient boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
    /// Positive-class weight. `None` means `n_neg / n_pos` of the training set.
    pub pos_weight: Option<f64>,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            max_depth: 4,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
            pos_weight: None,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::Config("min_child_weight must be non-negative".into()));
        }
        if let Some(w) = self.pos_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config("pos_weight must be positive".into()));
            }
        }
        Ok(())
    }
}

/// How per-frame Shapley values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapEngine {
    /// Exact enumeration when the player count allows it, tree paths otherwise.
    Auto,
    Exact,
    TreePath,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pps_extension_s: f64,
    pub frame_len_s: f64,
    pub frame_overlap: f64,
    pub band: (f64, f64),
    pub filter_order: usize,
    pub wavelet: Wavelet,
    pub dwt_levels: usize,
    pub cv_folds: usize,
    pub test_fraction: f64,
    pub gbdt: GbdtParams,
    pub exact_shap_max_players: usize,
    pub background_size: usize,
    pub shap_engine: ShapEngine,
    pub n_permutations: usize,
    /// Keep the elbow channel itself (top `k*`) rather than top `k* - 1`.
    pub elbow_inclusive: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pps_extension_s: 20.0,
            frame_len_s: 1.0,
            frame_overlap: 0.5,
            band: (1.0, 60.0),
            filter_order: 4,
            wavelet: Wavelet::Db4,
            dwt_levels: 5,
            cv_folds: 5,
            test_fraction: 0.2,
            gbdt: GbdtParams::default(),
            exact_shap_max_players: 15,
            background_size: 32,
            shap_engine: ShapEngine::Auto,
            n_permutations: 256,
            elbow_inclusive: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_overlap > 0.0 && self.frame_overlap < 1.0) {
            return Err(Error::Config(format!(
                "frame_overlap must be in (0, 1), got {}",
                self.frame_overlap
            )));
        }
        if !(self.pps_extension_s >= 0.0 && self.pps_extension_s.is_finite()) {
            return Err(Error::Config("pps_extension_s must be non-negative".into()));
        }
        if !(self.frame_len_s > 0.0 && self.frame_len_s.is_finite()) {
            return Err(Error::Config("frame_len_s must be positive".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must be in (0, 1)".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if self.dwt_levels == 0 {
            return Err(Error::Config("dwt_levels must be at least 1".into()));
        }
        if self.background_size == 0 {
            return Err(Error::Config("background_size must be at least 1".into()));
        }
        if self.exact_shap_max_players > 30 {
            return Err(Error::Config("exact_shap_max_players above 30 is not supported".into()));
        }
        if self.n_permutations == 0 {
            return Err(Error::Config("n_permutations must be at least 1".into()));
        }
        self.gbdt.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.pps_extension_s, 20.0);
        assert_eq!(cfg.frame_len_s, 1.0);
        assert_eq!(cfg.frame_overlap, 0.5);
        assert_eq!(cfg.band, (1.0, 60.0));
        assert_eq!(cfg.cv_folds, 5);
        assert_eq!(cfg.test_fraction, 0.2);
        assert_eq!(cfg.exact_shap_max_players, 15);
        assert_eq!(cfg.gbdt.n_rounds, 100);
        assert_eq!(cfg.gbdt.max_depth, 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"pps_extension_s": 0, "gbdt": {"n_rounds": 7}}"#).unwrap();
        assert_eq!(cfg.pps_extension_s, 0.0);
        assert_eq!(cfg.gbdt.n_rounds, 7);
        assert_eq!(cfg.gbdt.max_depth, 4);
        assert_eq!(cfg.wavelet, Wavelet::Db4);
    }

    #[test]
    fn rejects_bad_overlap() {
        let cfg = RunConfig {
            frame_overlap: 1.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
