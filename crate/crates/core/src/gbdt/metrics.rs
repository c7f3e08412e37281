use serde::{Deserialize, Serialize};

use super::{train, GbdtModel};
use crate::config::RunConfig;
use crate::dataset::{cv_folds, FrameDataset};
use crate::error::{Error, Result};

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: f1_score(precision, recall),
            tp,
            fp,
            tn,
            fn_,
        }
    }

    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn evaluate(model: &GbdtModel, test: &FrameDataset) -> Result<Metrics> {
    if test.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let predicted = test
        .rows()
        .map(|row| model.predict(row, DECISION_THRESHOLD))
        .collect::<Result<Vec<_>>>()?;
    let actual: Vec<bool> = test.labels().iter().map(|l| l.is_pps()).collect();
    Ok(Metrics::from_predictions(&predicted, &actual))
}

/// Trains on every row of `ds` with the configured hyperparameters.
pub fn fit(ds: &FrameDataset, cfg: &RunConfig) -> Result<GbdtModel> {
    let mut x = Vec::with_capacity(ds.n_rows() * ds.n_features());
    for row in ds.rows() {
        x.extend_from_slice(row);
    }
    let y: Vec<bool> = ds.labels().iter().map(|l| l.is_pps()).collect();
    let mut model = train(&x, ds.n_features(), &y, &cfg.gbdt)?;
    model.feature_names = ds.feature_names().to_vec();
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<Metrics>,
    pub mean_f1: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Stratified k-fold cross-validation; means are taken over folds.
pub fn cross_validate(ds: &FrameDataset, cfg: &RunConfig) -> Result<CvReport> {
    let folds = cv_folds(ds.labels(), cfg.cv_folds, cfg.seed)?;
    let run_fold = |split: &crate::dataset::Split| -> Result<Metrics> {
        let model = fit(&ds.subset(&split.train), cfg)?;
        evaluate(&model, &ds.subset(&split.test))
    };

    #[cfg(feature = "parallel")]
    let metrics = {
        use rayon::prelude::*;
        folds.par_iter().map(run_fold).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let metrics = folds.iter().map(run_fold).collect::<Result<Vec<_>>>()?;

    let k = metrics.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| metrics.iter().map(f).sum::<f64>() / k;
    Ok(CvReport {
        mean_f1: mean(|m| m.f1),
        mean_precision: mean(|m| m.precision),
        mean_recall: mean(|m| m.recall),
        folds: metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_arithmetic() {
        assert!((f1_score(0.9, 0.8) - 0.847_058_823_529_411_8).abs() < 1e-12);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        let all_right = Metrics::from_predictions(&[true, false, true], &[true, false, true]);
        assert_eq!(all_right.f1, 1.0);
        let all_negative = Metrics::from_predictions(&[false, false, false], &[true, false, true]);
        assert_eq!(
            (all_negative.precision, all_negative.recall, all_negative.f1),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn confusion_counts_match_recount() {
        let predicted = [true, true, false, false, true, false, true];
        let actual = [true, false, false, true, true, true, false];
        let m = Metrics::from_predictions(&predicted, &actual);
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (2, 2, 1, 2));
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
    }
}
