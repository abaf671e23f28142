//! Welch power spectral density estimate.

use rustfft::{num_complex::Complex, FftPlanner};

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin centre frequencies, Hz.
    pub frequency: Vec<f64>,
    /// One-sided power spectral density, signal units² per Hz.
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.frequency.get(1).copied().unwrap_or(0.0)
    }

    /// Index of the strongest bin at or above `min_hz`.
    pub fn peak(&self, min_hz: f64) -> Option<usize> {
        (0..self.density.len())
            .filter(|&i| self.frequency[i] >= min_hz)
            .max_by(|&a, &b| self.density[a].total_cmp(&self.density[b]))
    }

    /// Power integrated over `[lo, hi)` Hz.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.frequency
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .map(|(_, p)| p * df)
            .sum()
    }

    /// Density at the bin nearest `hz`.
    pub fn at(&self, hz: f64) -> f64 {
        let df = self.resolution();
        if df == 0.0 {
            return self.density.first().copied().unwrap_or(0.0);
        }
        let i = ((hz / df).round() as usize).min(self.density.len() - 1);
        self.density[i]
    }
}

/// Hann-windowed, 50 % overlapping, mean-removed segments of length
/// `segment` (clipped to the signal length). Returns `None` for signals
/// shorter than 4 samples.
pub fn welch(signal: &[f64], sample_rate: f64, segment: usize) -> Option<Spectrum> {
    let n = segment.min(signal.len());
    if n < 4 {
        return None;
    }
    let hop = n / 2;
    let window: Vec<f64> =
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut start = 0;
    while start + n <= signal.len() {
        let chunk = &signal[start..start + n];
        let mean = chunk.iter().sum::<f64>() / n as f64;
        for (b, (x, w)) in buf.iter_mut().zip(chunk.iter().zip(&window)) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let scale = 1.0 / (sample_rate * window_power * count as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let frequency = (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect();
    Some(Spectrum { frequency, density })
}
