//! Spectral-peak baseline: the two strongest non-DC spectral peaks of a
//! detrended segment, matched to per-class centroids of training peaks.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FftTemplates {
    /// Mean `(low, high)` peak bin per class, indexed by label.
    pub centroids: Vec<[f64; 2]>,
}

/// Removes the least-squares line.
fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let xm = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in x.iter().enumerate() {
        let dt = t as f64 - tm;
        sxy += dt * (v - xm);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter().enumerate().map(|(t, v)| v - xm - slope * (t as f64 - tm)).collect()
}

/// One-sided magnitude spectrum of the detrended signal, bins `0..=n/2`.
pub fn magnitude_spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = detrend(x).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf[..=x.len() / 2].iter().map(|c| c.norm()).collect()
}

/// Bin indices of the two strongest local maxima above DC, ascending.
/// Falls back to the strongest bins when the spectrum has fewer peaks.
pub fn spectral_peaks(x: &[f64]) -> [f64; 2] {
    let mag = magnitude_spectrum(x);
    let last = mag.len() - 1;
    let is_peak = |k: usize| mag[k] >= mag[k - 1] && (k == last || mag[k] >= mag[k + 1]);
    let by_mag = |a: &usize, b: &usize| mag[*b].total_cmp(&mag[*a]).then(a.cmp(b));
    let mut peaks: Vec<usize> = (1..=last).filter(|&k| is_peak(k)).collect();
    peaks.sort_by(by_mag);
    if peaks.len() < 2 {
        let mut all: Vec<usize> = (1..=last).collect();
        all.sort_by(by_mag);
        for k in all {
            if peaks.len() == 2 {
                break;
            }
            if !peaks.contains(&k) {
                peaks.push(k);
            }
        }
    }
    let (a, b) = (peaks[0] as f64, peaks[1] as f64);
    [a.min(b), a.max(b)]
}

impl FftTemplates {
    /// Centroids of training peaks; every label in `0..classes` needs a segment.
    pub fn fit<'a>(segments: impl IntoIterator<Item = (&'a [f64], u8)>, classes: usize) -> Result<Self> {
        let mut sums = vec![[0.0; 2]; classes];
        let mut counts = vec![0usize; classes];
        for (x, label) in segments {
            if x.len() < 4 {
                return Err(Error::TooFewSamples { needed: 4, got: x.len() });
            }
            let l = label as usize;
            if l >= classes {
                return Err(Error::InvalidConfig(format!("label {label} with {classes} classes")));
            }
            let p = spectral_peaks(x);
            sums[l][0] += p[0];
            sums[l][1] += p[1];
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidConfig(format!("no training segment for class {c}")));
        }
        let centroids = sums.iter().zip(&counts).map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64]).collect();
        Ok(Self { centroids })
    }
}

/// Nearest centroid in Euclidean bin distance; ties go to the lower label.
pub fn fft_baseline_classify(segment: &[f64], templates: &FftTemplates) -> u8 {
    let p = spectral_peaks(segment);
    let mut best = (f64::INFINITY, 0u8);
    for (label, c) in templates.centroids.iter().enumerate() {
        let d = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
        if d < best.0 {
            best = (d, label as u8);
        }
    }
    best.1
}
