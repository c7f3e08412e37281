//! Periodized orthogonal discrete wavelet transform.
//!
//! Odd-length inputs to any level are extended by repeating their last
//! sample (half-sample symmetric reflection) before the level is computed;
//! reconstruction drops that sample again, so `waverec(wavedec(x)) == x` for
//! every length.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    Db2,
    Db4,
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.48296291314469025,
    0.836516303737469,
    0.22414386804185735,
    -0.12940952255092145,
];

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

impl Wavelet {
    /// Orthonormal scaling (lowpass) filter.
    pub fn scaling_filter(self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::Db2 => &DB2,
            Wavelet::Db4 => &DB4,
        }
    }

    /// Quadrature mirror highpass: `g[n] = (-1)^n h[L-1-n]`.
    pub fn wavelet_filter(self) -> Vec<f64> {
        let h = self.scaling_filter();
        let len = h.len();
        (0..len)
            .map(|n| if n % 2 == 0 { h[len - 1 - n] } else { -h[len - 1 - n] })
            .collect()
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wavelet::Haar => "haar",
            Wavelet::Db2 => "db2",
            Wavelet::Db4 => "db4",
        })
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Wavelet::Haar),
            "db2" => Ok(Wavelet::Db2),
            "db4" => Ok(Wavelet::Db4),
            other => Err(Error::Config(format!("unsupported wavelet {other:?}"))),
        }
    }
}

/// Multi-level coefficients; `details[0]` is the finest band D1.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
    /// Unpadded input length at each level.
    lengths: Vec<usize>,
    wavelet: Wavelet,
}

impl Decomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Bands in feature order: D1..DL then AL.
    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        self.details
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.approx.as_slice()))
    }
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    debug_assert!(n.is_multiple_of(2));
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (tap, (&hv, &gv)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + tap) % n];
            a += hv * v;
            d += gv * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = 2 * approx.len();
    let mut x = vec![0.0; n];
    for k in 0..approx.len() {
        for (tap, (&hv, &gv)) in h.iter().zip(g).enumerate() {
            x[(2 * k + tap) % n] += hv * approx[k] + gv * detail[k];
        }
    }
    x
}

pub fn wavedec(signal: &[f64], wavelet: Wavelet, levels: usize) -> Result<Decomposition> {
    if levels == 0 || signal.len() < (1usize << levels.min(63)) {
        return Err(Error::FrameTooShort {
            len: signal.len(),
            levels,
        });
    }
    let h = wavelet.scaling_filter();
    let g = wavelet.wavelet_filter();
    let mut details = Vec::with_capacity(levels);
    let mut lengths = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        lengths.push(current.len());
        if current.len() % 2 == 1 {
            current.push(*current.last().expect("non-empty level"));
        }
        let (approx, detail) = analysis_step(&current, h, &g);
        details.push(detail);
        current = approx;
    }
    Ok(Decomposition {
        details,
        approx: current,
        lengths,
        wavelet,
    })
}

pub fn waverec(dec: &Decomposition) -> Vec<f64> {
    let h = dec.wavelet.scaling_filter();
    let g = dec.wavelet.wavelet_filter();
    let mut current = dec.approx.clone();
    for (detail, &len) in dec.details.iter().zip(&dec.lengths).rev() {
        current = synthesis_step(&current, detail, h, &g);
        current.truncate(len);
    }
    current
}
