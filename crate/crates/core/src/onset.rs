//! Spectral-flux onset frame detection.

use crate::scalar::Real;
use crate::spectral::MagnitudeSpectrogram;

pub const DEFAULT_THRESHOLD_FACTOR: f64 = 1.5;
pub const DEFAULT_MEDIAN_HALFWIDTH: usize = 8;

/// `flux(t) = sum_f max(0, V(f,t) - V(f,t-1))`, with `flux(0) = sum_f V(f,0)`.
pub fn spectral_flux<T: Real>(v: &MagnitudeSpectrogram<T>) -> Vec<T> {
    let data = v.data();
    (0..v.frames())
        .map(|t| {
            if t == 0 {
                data.column(0).sum()
            } else {
                data.column(t)
                    .iter()
                    .zip(data.column(t - 1).iter())
                    .map(|(&a, &b)| (a - b).max(T::zero()))
                    .sum()
            }
        })
        .collect()
}

fn median<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) * T::lit(0.5)
    }
}

/// Frame 0 plus every strict local maximum of the flux that exceeds
/// `threshold_factor` times the median flux over `[t - h, t + h]`.
pub fn detect_onset_frames<T: Real>(
    v: &MagnitudeSpectrogram<T>,
    threshold_factor: T,
    median_halfwidth: usize,
) -> Vec<usize> {
    let flux = spectral_flux(v);
    onsets_from_flux(&flux, threshold_factor, median_halfwidth)
}

pub fn onsets_from_flux<T: Real>(
    flux: &[T],
    threshold_factor: T,
    median_halfwidth: usize,
) -> Vec<usize> {
    let n = flux.len();
    let mut onsets = vec![0];
    let mut window = Vec::with_capacity(2 * median_halfwidth + 1);
    for t in 1..n {
        let left = flux[t - 1];
        let is_peak = flux[t] > left && (t + 1 == n || flux[t] > flux[t + 1]);
        if !is_peak {
            continue;
        }
        window.clear();
        window.extend_from_slice(
            &flux[t.saturating_sub(median_halfwidth)..(t + median_halfwidth + 1).min(n)],
        );
        if flux[t] > threshold_factor * median(&mut window) {
            onsets.push(t);
        }
    }
    onsets
}
