//! Butterworth bandpass design (bilinear transform, second-order sections)
//! and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One second-order section, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z_inv2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z_inv2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z_inv2 * self.a[2];
        num / den
    }

    /// Direct form II transposed state matching a unit step at steady state.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z1 = b2 - a2 * gain;
        let z0 = b1 - a1 * gain + z1;
        [z0, z1]
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex frequency response at `freq` Hz.
    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Largest pole magnitude across sections.
    pub fn max_pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let [_, a1, a2] = s.a;
                let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
                let r1 = ((-a1 + disc) / 2.0).norm();
                let r2 = ((-a1 - disc) / 2.0).norm();
                r1.max(r2)
            })
            .fold(0.0, f64::max)
    }

    fn initial_state(&self, x0: f64) -> Vec<[f64; 2]> {
        let mut scale = x0;
        self.sections
            .iter()
            .map(|s| {
                let [z0, z1] = s.step_state();
                let state = [z0 * scale, z1 * scale];
                scale *= s.dc_gain();
                state
            })
            .collect()
    }

    /// Causal filtering with the given per-section state.
    fn run(&self, signal: &mut [f64], mut state: Vec<[f64; 2]>) {
        for x in signal.iter_mut() {
            let mut v = *x;
            for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                let y = s.b[0] * v + z[0];
                z[0] = s.b[1] * v - s.a[1] * y + z[1];
                z[1] = s.b[2] * v - s.a[2] * y;
                v = y;
            }
            *x = v;
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        self.run(&mut out, vec![[0.0; 2]; self.sections.len()]);
        out
    }

    /// Zero-phase filtering: forward then backward pass over an odd
    /// extension of the signal, each pass started from the steady state of
    /// its first sample.
    pub fn filtfilt(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        if n < 2 {
            return signal.to_vec();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let first = signal[0];
        let last = signal[n - 1];
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        let state = self.initial_state(ext[0]);
        self.run(&mut ext, state);
        ext.reverse();
        let state = self.initial_state(ext[0]);
        self.run(&mut ext, state);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Designs a digital Butterworth bandpass with `order` analog prototype
/// poles (the bandpass has `2 * order` poles, one biquad per prototype pole).
///
/// Passband edges are prewarped, so the digital response is exactly
/// `1 / sqrt(2)` at `low` and `high` and unity at the warped band center.
pub fn design_bandpass(fs: f64, low: f64, high: f64, order: usize) -> Result<SosFilter> {
    let valid = fs.is_finite()
        && low > 0.0
        && low < high
        && high < fs / 2.0
        && (2..=8).contains(&order)
        && order.is_multiple_of(2);
    if !valid {
        return Err(Error::BandOutOfRange { low, high, fs, order });
    }

    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let w_low = warp(low);
    let w_high = warp(high);
    let w0 = (w_low * w_high).sqrt();
    let bw = w_high - w_low;
    let two_fs = Complex64::new(2.0 * fs, 0.0);

    let mut poles = Vec::with_capacity(order);
    for k in 0..order {
        let theta = PI * (2 * k + 1 + order) as f64 / (2 * order) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let pb = proto * bw;
        let root = (pb * pb - 4.0 * w0 * w0).sqrt();
        for s in [(pb + root) / 2.0, (pb - root) / 2.0] {
            let z = (two_fs + s) / (two_fs - s);
            if z.im > 0.0 {
                poles.push(z);
            }
        }
    }
    if poles.len() != order {
        return Err(Error::UnstableFilter(f64::NAN));
    }
    poles.sort_by(|a, b| a.arg().total_cmp(&b.arg()));

    let mut sections: Vec<Biquad> = poles
        .iter()
        .map(|q| Biquad {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -2.0 * q.re, q.norm_sqr()],
        })
        .collect();

    let center = fs / PI * (w0 / (2.0 * fs)).atan();
    let mut filter = SosFilter {
        sections: sections.clone(),
    };
    let gain = 1.0 / filter.response(center, fs).norm();
    let per_section = gain.powf(1.0 / order as f64);
    for s in &mut sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    filter = SosFilter { sections };

    let radius = filter.max_pole_radius();
    if !(radius < 1.0) {
        return Err(Error::UnstableFilter(radius));
    }
    Ok(filter)
}

/// Zero-phase Butterworth bandpass of `signal`.
pub fn butterworth_bandpass(signal: &[f64], fs: f64, band: (f64, f64), order: usize) -> Result<Vec<f64>> {
    let filter = design_bandpass(fs, band.0, band.1, order)?;
    Ok(filter.filtfilt(signal))
}
