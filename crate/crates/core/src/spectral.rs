//! Windowed STFT analysis and synthesis, plus the consistency criterion.
//!
//! Spectrograms are stored as `F x T` arrays (bins along axis 0, frames along
//! axis 1) with `F = N_w / 2 + 1`. Frame `t` covers samples `[tS, tS + N_w)`;
//! the signal tail is zero-padded so that every sample lies in some frame.
//! Synthesis is the least-squares inverse: weighted overlap-add with the
//! analysis window, normalized per sample by the sum of squared windows.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, Axis, Zip};
use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum relative deviation of the overlap-added window from a constant.
pub const COLA_TOLERANCE: f64 = 1e-10;

/// Overlap-add normalizers at or below this value count as outside the
/// interior region (they are too small for a stable division).
pub const INTERIOR_NORMALIZER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
    Blackman,
}

impl WindowKind {
    pub const ALL: [WindowKind; 3] = [WindowKind::Hann, WindowKind::Hamming, WindowKind::Blackman];

    fn coefficients(self) -> (f64, f64, f64) {
        match self {
            WindowKind::Hann => (0.5, 0.5, 0.0),
            WindowKind::Hamming => (0.54, 0.46, 0.0),
            WindowKind::Blackman => (0.42, 0.5, 0.08),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Blackman => "blackman",
        })
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "blackman" => Ok(WindowKind::Blackman),
            _ => Err(Error::UnknownWindow(s.to_string())),
        }
    }
}

fn window_f64(kind: WindowKind, length: usize) -> Vec<f64> {
    let (a0, a1, a2) = kind.coefficients();
    let n = length as f64;
    (0..length)
        .map(|i| {
            let x = std::f64::consts::TAU * i as f64 / n;
            (a0 - a1 * x.cos() + a2 * (2.0 * x).cos()).clamp(0.0, 1.0)
        })
        .collect()
}

/// Periodic window of the given kind (`w(0) = 0` for Hann).
pub fn make_window<T: Real>(kind: WindowKind, length: usize) -> Result<Vec<T>> {
    if length < 2 {
        return Err(Error::WindowTooShort(length));
    }
    Ok(window_f64(kind, length).into_iter().map(T::lit).collect())
}

/// Relative peak-to-peak deviation of `sum_k w(n - kS)` over one hop period.
pub fn cola_deviation(kind: WindowKind, length: usize, hop: usize) -> f64 {
    let w = window_f64(kind, length);
    let sums: Vec<f64> = (0..hop)
        .map(|n| w.iter().skip(n).step_by(hop).sum())
        .collect();
    let max = sums.iter().cloned().fold(f64::MIN, f64::max);
    let min = sums.iter().cloned().fold(f64::MAX, f64::min);
    let mean = sums.iter().sum::<f64>() / hop as f64;
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    (max - min) / mean
}

/// Analysis parameters. Construction validates the constant-overlap-add property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StftConfig {
    window: WindowKind,
    window_length: usize,
    hop: usize,
    sample_rate: u32,
}

impl StftConfig {
    pub const DEFAULT_WINDOW_LENGTH: usize = 4096;

    pub fn new(
        window: WindowKind,
        window_length: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        if window_length < 2 {
            return Err(Error::WindowTooShort(window_length));
        }
        if hop == 0 || hop > window_length {
            return Err(Error::InvalidHop {
                hop,
                window: window_length,
            });
        }
        let deviation = cola_deviation(window, window_length, hop);
        if deviation.is_nan() || deviation > COLA_TOLERANCE {
            return Err(Error::ColaViolation { deviation });
        }
        Ok(Self {
            window,
            window_length,
            hop,
            sample_rate,
        })
    }

    /// `window_length / 4` hop (75% overlap).
    pub fn with_default_hop(
        window: WindowKind,
        window_length: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        Self::new(
            window,
            window_length,
            (window_length / 4).max(1),
            sample_rate,
        )
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bins(&self) -> usize {
        self.window_length / 2 + 1
    }

    /// Number of frames needed to cover `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.window_length {
            1
        } else {
            1 + (len - self.window_length).div_ceil(self.hop)
        }
    }

    /// Length of the signal produced by synthesizing `frames` frames.
    pub fn synthesis_length(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.window_length
        }
    }

    /// Zero margin that puts every original sample under a full set of
    /// overlapping frames once added to both ends of a signal.
    pub fn edge_margin(&self) -> usize {
        self.window_length - self.hop
    }
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::new(
            WindowKind::Hann,
            Self::DEFAULT_WINDOW_LENGTH,
            Self::DEFAULT_WINDOW_LENGTH / 4,
            44_100,
        )
        .expect("default configuration is valid")
    }
}

/// Pads `margin` zeros at both ends of `signal`.
pub fn pad_edges<T: Real>(signal: &[T], margin: usize) -> Vec<T> {
    let mut out = vec![T::zero(); signal.len() + 2 * margin];
    out[margin..margin + signal.len()].copy_from_slice(signal);
    out
}

/// Inverse of [`pad_edges`]: drops `margin` leading samples and keeps `len`.
pub fn trim_edges<T: Real>(signal: &[T], margin: usize, len: usize) -> Vec<T> {
    let mut out: Vec<T> = signal.iter().skip(margin).take(len).copied().collect();
    out.resize(len, T::zero());
    out
}

fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `F x T` grid of complex STFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram<T: Real> {
    data: Array2<Complex<T>>,
    config: StftConfig,
}

impl<T: Real> ComplexSpectrogram<T> {
    pub fn new(data: Array2<Complex<T>>, config: StftConfig) -> Result<Self> {
        if data.nrows() != config.bins() {
            return Err(Error::DimensionMismatch {
                expected: (config.bins(), data.ncols()),
                found: data.dim(),
            });
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("complex spectrogram"));
        }
        Ok(Self { data, config })
    }

    pub fn zeros(config: StftConfig, frames: usize) -> Self {
        Self {
            data: Array2::zeros((config.bins(), frames)),
            config,
        }
    }

    /// `magnitude * exp(i * phase)`, reproducing the magnitude exactly where
    /// the phase is zero and to rounding elsewhere.
    pub fn from_polar(magnitude: &MagnitudeSpectrogram<T>, phase: &Array2<T>) -> Result<Self> {
        check_dims(magnitude.dim(), phase.dim())?;
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("phase"));
        }
        let data = Zip::from(&magnitude.data)
            .and(phase)
            .map_collect(|&m, &p| Complex::from_polar(m, p));
        Ok(Self {
            data,
            config: magnitude.config,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn data(&self) -> &Array2<Complex<T>> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex<T>> {
        self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, Complex<T>> {
        self.data.column(t)
    }

    pub fn magnitude(&self) -> MagnitudeSpectrogram<T> {
        MagnitudeSpectrogram {
            data: self.data.mapv(|c| c.norm()),
            config: self.config,
        }
    }

    pub fn phase(&self) -> Array2<T> {
        self.data.mapv(|c| c.arg())
    }

    /// `sum |X|^2`
    pub fn energy(&self) -> T {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `sum |X - other|^2`
    pub fn squared_distance(&self, other: &Self) -> Result<T> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum())
    }
}

/// `F x T` grid of nonnegative magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram<T: Real> {
    data: Array2<T>,
    config: StftConfig,
}

impl<T: Real> MagnitudeSpectrogram<T> {
    pub fn new(data: Array2<T>, config: StftConfig) -> Result<Self> {
        if data.nrows() != config.bins() {
            return Err(Error::DimensionMismatch {
                expected: (config.bins(), data.ncols()),
                found: data.dim(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("magnitude spectrogram"));
        }
        if data.iter().any(|&v| v < T::zero()) {
            return Err(Error::NegativeMagnitude("magnitude spectrogram"));
        }
        Ok(Self { data, config })
    }

    pub fn zeros(config: StftConfig, frames: usize) -> Self {
        Self {
            data: Array2::zeros((config.bins(), frames)),
            config,
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn into_data(self) -> Array2<T> {
        self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, T> {
        self.data.column(t)
    }
}

/// Reusable STFT engine holding the window and FFT plans for one configuration.
#[derive(Clone)]
pub struct Stft<T: Real> {
    config: StftConfig,
    window: Vec<T>,
    forward: Arc<dyn RealToComplex<T>>,
    inverse: Arc<dyn ComplexToReal<T>>,
}

impl<T: Real> fmt::Debug for Stft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl<T: Real> Stft<T> {
    pub fn new(config: StftConfig) -> Self {
        let mut planner = RealFftPlanner::<T>::new();
        let n = config.window_length();
        Self {
            config,
            window: make_window(config.window(), n).expect("validated window length"),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn window(&self) -> &[T] {
        &self.window
    }

    pub fn analyze(&self, signal: &[T]) -> Result<ComplexSpectrogram<T>> {
        if signal.is_empty() {
            return Err(Error::EmptySignal);
        }
        if signal.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        let n = self.config.window_length();
        let hop = self.config.hop();
        let frames = self.config.frame_count(signal.len());
        let mut data = Array2::zeros((self.config.bins(), frames));
        let mut buf = self.forward.make_input_vec();
        let mut spectrum = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();
        for (t, mut column) in data.axis_iter_mut(Axis(1)).enumerate() {
            let start = t * hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = signal
                    .get(start + i)
                    .map_or(T::zero(), |&x| x * self.window[i]);
            }
            self.forward
                .process_with_scratch(&mut buf, &mut spectrum, &mut scratch)
                .expect("buffer sizes match the plan");
            for (dst, src) in column.iter_mut().zip(spectrum.iter()) {
                *dst = *src;
            }
        }
        debug_assert_eq!(self.config.synthesis_length(frames) >= signal.len(), n > 0);
        Ok(ComplexSpectrogram {
            data,
            config: self.config,
        })
    }

    /// Least-squares inverse; returns `(T - 1) S + N_w` samples. Samples whose
    /// overlap-add normalizer vanishes are set to zero.
    pub fn synthesize(&self, spec: &ComplexSpectrogram<T>) -> Result<Vec<T>> {
        self.check(spec)?;
        let n = self.config.window_length();
        let hop = self.config.hop();
        let len = self.config.synthesis_length(spec.frames());
        let mut out = vec![T::zero(); len];
        let mut norm = vec![T::zero(); len];
        let mut spectrum = self.inverse.make_input_vec();
        let mut buf = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        let scale = T::one() / T::from_usize_lossy(n);
        let last = spectrum.len() - 1;
        for (t, column) in spec.data.axis_iter(Axis(1)).enumerate() {
            for (dst, src) in spectrum.iter_mut().zip(column.iter()) {
                *dst = *src;
            }
            // DC (and Nyquist for even lengths) must be real for a real output.
            spectrum[0].im = T::zero();
            if n.is_multiple_of(2) {
                spectrum[last].im = T::zero();
            }
            self.inverse
                .process_with_scratch(&mut spectrum, &mut buf, &mut scratch)
                .expect("buffer sizes match the plan");
            let start = t * hop;
            for (i, (&y, &w)) in buf.iter().zip(self.window.iter()).enumerate() {
                out[start + i] = out[start + i] + w * y * scale;
                norm[start + i] = norm[start + i] + w * w;
            }
        }
        for (o, &d) in out.iter_mut().zip(norm.iter()) {
            *o = if d > T::min_positive_value() {
                *o / d
            } else {
                T::zero()
            };
        }
        Ok(out)
    }

    /// Per-sample overlap-add normalizer `sum_t w(n - tS)^2` for `frames` frames.
    pub fn normalizer(&self, frames: usize) -> Vec<T> {
        let len = self.config.synthesis_length(frames);
        let mut norm = vec![T::zero(); len];
        for t in 0..frames {
            for (i, &w) in self.window.iter().enumerate() {
                norm[t * self.config.hop() + i] = norm[t * self.config.hop() + i] + w * w;
            }
        }
        norm
    }

    /// Projection onto consistent spectrograms: `STFT(iSTFT(X))`.
    pub fn project(&self, spec: &ComplexSpectrogram<T>) -> Result<ComplexSpectrogram<T>> {
        let signal = self.synthesize(spec)?;
        let projected = self.analyze(&signal)?;
        debug_assert_eq!(projected.dim(), spec.dim());
        Ok(projected)
    }

    /// `sum |X - STFT(iSTFT(X))|^2`
    pub fn inconsistency(&self, spec: &ComplexSpectrogram<T>) -> Result<T> {
        let projected = self.project(spec)?;
        spec.squared_distance(&projected)
    }

    fn check(&self, spec: &ComplexSpectrogram<T>) -> Result<()> {
        if spec.bins() != self.config.bins()
            || spec.config.window_length() != self.config.window_length()
        {
            return Err(Error::DimensionMismatch {
                expected: (self.config.bins(), spec.frames()),
                found: spec.dim(),
            });
        }
        Ok(())
    }
}

pub fn stft<T: Real>(signal: &[T], config: &StftConfig) -> Result<ComplexSpectrogram<T>> {
    Stft::new(*config).analyze(signal)
}

pub fn istft<T: Real>(spec: &ComplexSpectrogram<T>, config: &StftConfig) -> Result<Vec<T>> {
    Stft::new(*config).synthesize(spec)
}

pub fn inconsistency<T: Real>(spec: &ComplexSpectrogram<T>, config: &StftConfig) -> Result<T> {
    Stft::new(*config).inconsistency(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> StftConfig {
        StftConfig::with_default_hop(WindowKind::Hann, n, 8000).unwrap()
    }

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn hann_four() {
        let w: Vec<f64> = make_window(WindowKind::Hann, 4).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hamming_four() {
        let w: Vec<f64> = make_window(WindowKind::Hamming, 4).unwrap();
        // 0.54 - 0.46 cos(2 pi n / 4)
        let expected = [0.08, 0.54, 1.0, 0.54];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hann_sum_is_half_length() {
        for n in [2usize, 3, 16, 255, 1024] {
            let w: Vec<f64> = make_window(WindowKind::Hann, n).unwrap();
            let s: f64 = w.iter().sum();
            assert!((s - n as f64 / 2.0).abs() < 1e-9, "n={n} sum={s}");
        }
    }

    #[test]
    fn windows_in_unit_range() {
        for kind in WindowKind::ALL {
            let w: Vec<f64> = make_window(kind, 512).unwrap();
            assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn window_errors() {
        assert!(matches!(
            make_window::<f64>(WindowKind::Hann, 1),
            Err(Error::WindowTooShort(1))
        ));
        assert!("triangle".parse::<WindowKind>().is_err());
        assert_eq!(
            "Blackman".parse::<WindowKind>().unwrap(),
            WindowKind::Blackman
        );
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::new(WindowKind::Hann, 1024, 256, 1).is_ok());
        assert!(StftConfig::new(WindowKind::Hamming, 1024, 256, 1).is_ok());
        assert!(StftConfig::new(WindowKind::Blackman, 1024, 256, 1).is_ok());
        assert!(StftConfig::new(WindowKind::Hann, 1024, 512, 1).is_ok());
        assert!(matches!(
            StftConfig::new(WindowKind::Blackman, 1024, 512, 1),
            Err(Error::ColaViolation { .. })
        ));
        assert!(matches!(
            StftConfig::new(WindowKind::Hann, 1024, 300, 1),
            Err(Error::ColaViolation { .. })
        ));
        assert!(matches!(
            StftConfig::new(WindowKind::Hann, 1024, 0, 1),
            Err(Error::InvalidHop { .. })
        ));
        assert!(matches!(
            StftConfig::new(WindowKind::Hann, 1024, 2048, 1),
            Err(Error::InvalidHop { .. })
        ));
        let d = StftConfig::default();
        assert_eq!((d.window_length(), d.hop(), d.bins()), (4096, 1024, 2049));
    }

    #[test]
    fn frame_coverage() {
        let c = cfg(64);
        assert_eq!(c.frame_count(1), 1);
        assert_eq!(c.frame_count(64), 1);
        assert_eq!(c.frame_count(65), 2);
        assert_eq!(c.frame_count(80), 2);
        assert_eq!(c.frame_count(81), 3);
        for len in 1..300 {
            assert!(c.synthesis_length(c.frame_count(len)) >= len);
        }
    }

    #[test]
    fn zero_signal_zero_spectrum() {
        let s = stft(&vec![0.0f64; 1000], &cfg(64)).unwrap();
        assert!(s.data().iter().all(|c| c.norm() == 0.0));
        let x = istft(&s, &cfg(64)).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_signal_rejected() {
        assert!(matches!(
            stft::<f64>(&[], &cfg(64)),
            Err(Error::EmptySignal)
        ));
    }

    #[test]
    fn cosine_at_exact_bin() {
        let n = 256;
        let k = 13;
        let c = cfg(n);
        let x: Vec<f64> = (0..4 * n)
            .map(|i| (std::f64::consts::TAU * k as f64 * i as f64 / n as f64).cos())
            .collect();
        let s = stft(&x, &c).unwrap();
        // Closed form: sum_n w(n) cos(2 pi k n/N) e^{-2 pi i k n/N} = (1/2) sum_n w(n) = N/4
        // for interior frames of a periodic Hann window.
        for t in 0..s.frames() - 4 {
            assert!((s.data()[[k, t]].norm() - n as f64 / 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_single_frame() {
        let n = 128;
        let c = cfg(n);
        let x = noise(n, 3);
        let w: Vec<f64> = make_window(WindowKind::Hann, n).unwrap();
        let time_energy: f64 = x.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
        let s = stft(&x, &c).unwrap();
        let col = s.frame(0);
        let freq_energy: f64 = col
            .iter()
            .enumerate()
            .map(|(f, v)| {
                if f == 0 || f == n / 2 {
                    v.norm_sqr()
                } else {
                    2.0 * v.norm_sqr()
                }
            })
            .sum();
        assert!((freq_energy / n as f64 - time_energy).abs() < 1e-10 * time_energy);
    }

    #[test]
    fn round_trip_interior() {
        for kind in WindowKind::ALL {
            let c = StftConfig::with_default_hop(kind, 512, 1).unwrap();
            let engine = Stft::<f64>::new(c);
            let x = noise(5000, 7);
            let s = engine.analyze(&x).unwrap();
            let y = engine.synthesize(&s).unwrap();
            let norm = engine.normalizer(s.frames());
            let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..x.len() {
                if norm[i] > INTERIOR_NORMALIZER {
                    assert!((x[i] - y[i]).abs() <= 1e-10 * peak, "{kind} sample {i}");
                }
            }
        }
    }

    #[test]
    fn random_phase_is_inconsistent() {
        let c = cfg(64);
        let engine = Stft::<f64>::new(c);
        let s = engine.analyze(&noise(1000, 1)).unwrap();
        assert!(engine.inconsistency(&s).unwrap() < 1e-18 * s.energy());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phase = s.phase().mapv(|_| rng.random_range(-3.0..3.0));
        let r = ComplexSpectrogram::from_polar(&s.magnitude(), &phase).unwrap();
        let projected = engine.project(&r).unwrap();
        assert!(r.squared_distance(&projected).unwrap() > 1e-3 * r.energy());
        let i0 = engine.inconsistency(&r).unwrap();
        assert!(i0 > 0.0);
        assert!(engine.inconsistency(&projected).unwrap() <= i0);
    }

    #[test]
    fn dimension_mismatch() {
        let c64 = cfg(64);
        let s = ComplexSpectrogram::<f64>::zeros(cfg(128), 3);
        assert!(matches!(
            istft(&s, &c64),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ComplexSpectrogram::<f64>::new(Array2::zeros((10, 2)), c64).is_err());
        let bad = Array2::from_elem((33, 2), Complex::new(f64::NAN, 0.0));
        assert!(matches!(
            ComplexSpectrogram::new(bad, c64),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            MagnitudeSpectrogram::new(Array2::from_elem((33, 2), -1.0), c64),
            Err(Error::NegativeMagnitude(_))
        ));
    }

    #[test]
    fn padding_round_trip() {
        let x = noise(100, 5);
        let p = pad_edges(&x, 7);
        assert_eq!(p.len(), 114);
        assert_eq!(trim_edges(&p, 7, 100), x);
    }

    #[test]
    fn single_precision_round_trip() {
        let c = cfg(256);
        let engine = Stft::<f32>::new(c);
        let x: Vec<f32> = noise(2000, 2).into_iter().map(|v| v as f32).collect();
        let y = engine.synthesize(&engine.analyze(&x).unwrap()).unwrap();
        let norm = engine.normalizer(engine.config().frame_count(x.len()));
        for i in 0..x.len() {
            if norm[i] > 1e-2 {
                assert!((x[i] - y[i]).abs() < 1e-4);
            }
        }
    }
}
