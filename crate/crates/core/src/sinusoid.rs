//! Sinusoidal-model phase reconstruction.
//!
//! Within one frame, magnitude peaks are located, their frequencies refined by
//! quadratic interpolation of the log-spectrum, and every bin is assigned to
//! the peak whose region of influence contains it. The phase of the next
//! frame then follows from `phi(f, t) = phi(f, t - 1) + 2 pi S nu(f, t)`.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{wrap_phase, Real};
use crate::spectral::{ComplexSpectrogram, MagnitudeSpectrogram, StftConfig};

/// Additive floor applied before taking logarithms in [`qifft`].
pub const LOG_FLOOR: f64 = 1e-12;
const DEGENERATE_CURVATURE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub bin: usize,
    pub magnitude: T,
    /// Normalized frequency in cycles per sample.
    pub frequency: T,
}

/// Peaks of one frame and their regions of influence (inclusive bin ranges).
#[derive(Debug, Clone, PartialEq)]
pub struct FramePartition<T> {
    peaks: Vec<Peak<T>>,
    ranges: Vec<(usize, usize)>,
    bins: usize,
}

impl<T: Real> FramePartition<T> {
    pub fn peaks(&self) -> &[Peak<T>] {
        &self.peaks
    }

    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Per-bin frequency `nu(f)`.
    pub fn frequency_map(&self) -> Vec<T> {
        let mut nu = vec![T::zero(); self.bins];
        for (peak, &(lo, hi)) in self.peaks.iter().zip(&self.ranges) {
            nu[lo..=hi].fill(peak.frequency);
        }
        nu
    }
}

/// Interior strict local maxima (`v(f) > v(f-1)` and `v(f) >= v(f+1)`), ascending.
pub fn find_peaks<T: Real>(frame: &[T]) -> Result<Vec<usize>> {
    find_peaks_above(frame, T::zero())
}

/// As [`find_peaks`], additionally requiring `v(f) > floor`.
pub fn find_peaks_above<T: Real>(frame: &[T], floor: T) -> Result<Vec<usize>> {
    if frame.len() < 3 {
        return Err(Error::TooFewBins(frame.len()));
    }
    Ok(frame
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] >= w[2] && w[1] > floor)
        .map(|(i, _)| i + 1)
        .collect())
}

/// Vertex offset of the parabola through `(-1, alpha), (0, beta), (1, gamma)`,
/// clamped to half a bin. Returns zero for degenerate curvature.
pub fn parabolic_offset<T: Real>(alpha: T, beta: T, gamma: T) -> T {
    let curvature = alpha - beta - beta + gamma;
    if curvature.abs() < T::lit(DEGENERATE_CURVATURE) {
        return T::zero();
    }
    let half = T::lit(0.5);
    (half * (alpha - gamma) / curvature).max(-half).min(half)
}

/// Quadratically interpolated frequency (cycles/sample) of the peak at `bin`.
pub fn qifft<T: Real>(frame: &[T], bin: usize, window_length: usize) -> Result<T> {
    if bin >= frame.len() {
        return Err(Error::BinOutOfRange {
            bin,
            bins: frame.len(),
        });
    }
    let n = T::from_usize_lossy(window_length);
    let f = T::from_usize_lossy(bin);
    if bin == 0 || bin + 1 == frame.len() {
        return Ok(f / n);
    }
    let eps = T::lit(LOG_FLOOR);
    let log = |v: T| (v + eps).ln();
    let delta = parabolic_offset(log(frame[bin - 1]), log(frame[bin]), log(frame[bin + 1]));
    Ok((f + delta) / n)
}

/// Splits `[0, F)` among `peaks` (ascending by bin). The boundary between two
/// neighbors moves toward the weaker one in proportion to the magnitudes.
pub fn regions_of_influence<T: Real>(
    frame: &[T],
    peaks: Vec<Peak<T>>,
) -> Result<FramePartition<T>> {
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    let bins = frame.len();
    if let Some(p) = peaks.iter().find(|p| p.bin >= bins) {
        return Err(Error::BinOutOfRange { bin: p.bin, bins });
    }
    let mut ranges = Vec::with_capacity(peaks.len());
    let mut lo = 0;
    for pair in peaks.windows(2) {
        let (left, right) = (pair[0], pair[1]);
        let span = right.bin - left.bin;
        let (a, b) = (frame[left.bin], frame[right.bin]);
        let share = if a + b > T::zero() {
            a / (a + b)
        } else {
            T::lit(0.5)
        };
        let step = (T::from_usize_lossy(span) * share)
            .round()
            .to_usize()
            .unwrap_or(0);
        let boundary = (left.bin + step).clamp(left.bin, right.bin.saturating_sub(1).max(left.bin));
        ranges.push((lo, boundary));
        lo = boundary + 1;
    }
    ranges.push((lo, bins - 1));
    Ok(FramePartition {
        peaks,
        ranges,
        bins,
    })
}

/// Frame-level phase unwrapping with a fixed hop and window length.
#[derive(Debug, Clone, Copy)]
pub struct PhaseUnwrapper<T> {
    hop: usize,
    window_length: usize,
    peak_floor: T,
}

impl<T: Real> PhaseUnwrapper<T> {
    pub fn new(config: &StftConfig) -> Self {
        Self {
            hop: config.hop(),
            window_length: config.window_length(),
            peak_floor: T::zero(),
        }
    }

    /// Ignores peaks whose magnitude does not exceed `floor`.
    pub fn with_peak_floor(mut self, floor: T) -> Self {
        self.peak_floor = floor;
        self
    }

    /// Peak picking, frequency estimation and region assignment for one frame.
    /// Returns `None` for a frame without peaks.
    pub fn partition(&self, magnitude: &[T]) -> Result<Option<FramePartition<T>>> {
        let bins = find_peaks_above(magnitude, self.peak_floor)?;
        if bins.is_empty() {
            return Ok(None);
        }
        let peaks = bins
            .into_iter()
            .map(|bin| {
                Ok(Peak {
                    bin,
                    magnitude: magnitude[bin],
                    frequency: qifft(magnitude, bin, self.window_length)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        regions_of_influence(magnitude, peaks).map(Some)
    }

    /// Advances `prev_phase` by one hop using the frequencies estimated on `magnitude`.
    pub fn unwrap_frame(&self, magnitude: &[T], prev_phase: &[T]) -> Result<Vec<T>> {
        let mut phase = prev_phase.to_vec();
        self.unwrap_in_place(magnitude, &mut phase)?;
        Ok(phase)
    }

    pub fn unwrap_in_place(&self, magnitude: &[T], phase: &mut [T]) -> Result<()> {
        if magnitude.len() != phase.len() {
            return Err(Error::LengthMismatch {
                expected: magnitude.len(),
                found: phase.len(),
            });
        }
        let Some(partition) = self.partition(magnitude)? else {
            return Ok(());
        };
        let hop = T::from_usize_lossy(self.hop);
        for (peak, &(lo, hi)) in partition.peaks.iter().zip(&partition.ranges) {
            // Reduce S * nu modulo one cycle before scaling by 2 pi.
            let cycles = hop * peak.frequency;
            let advance = T::TAU() * (cycles - cycles.floor());
            for p in &mut phase[lo..=hi] {
                *p = wrap_phase(*p + advance);
            }
        }
        Ok(())
    }

    /// Frame-by-frame reconstruction of one source. Frame 0 and onset frames
    /// take the onset phase (or, failing that, the phase of `fallback`); all
    /// other frames are unwrapped from the previous one.
    pub fn reconstruct(
        &self,
        magnitude: &MagnitudeSpectrogram<T>,
        onsets: &OnsetMask<T>,
        fallback: Option<&ComplexSpectrogram<T>>,
    ) -> Result<ComplexSpectrogram<T>> {
        let phase = self.reconstruct_phase(magnitude, onsets, fallback, 0)?;
        ComplexSpectrogram::from_polar(magnitude, &phase)
    }

    pub(crate) fn reconstruct_phase(
        &self,
        magnitude: &MagnitudeSpectrogram<T>,
        onsets: &OnsetMask<T>,
        fallback: Option<&ComplexSpectrogram<T>>,
        source_index: usize,
    ) -> Result<Array2<T>> {
        let (bins, frames) = magnitude.dim();
        onsets.check(bins, frames)?;
        if let Some(x) = fallback {
            if x.dim() != magnitude.dim() {
                return Err(Error::DimensionMismatch {
                    expected: magnitude.dim(),
                    found: x.dim(),
                });
            }
        }
        let mut phase = Array2::zeros((bins, frames));
        let mut current = vec![T::zero(); bins];
        let mut column = vec![T::zero(); bins];
        for t in 0..frames {
            if t == 0 || onsets.contains(t) {
                onsets.fill_onset_phase(t, fallback, &mut current, source_index)?;
            } else {
                column
                    .iter_mut()
                    .zip(magnitude.frame(t))
                    .for_each(|(c, &v)| *c = v);
                self.unwrap_in_place(&column, &mut current)?;
            }
            phase
                .column_mut(t)
                .iter_mut()
                .zip(&current)
                .for_each(|(p, &c)| *p = c);
        }
        Ok(phase)
    }
}

/// Phase unwrapping of one frame; see [`PhaseUnwrapper::unwrap_frame`].
pub fn unwrap_frame<T: Real>(
    magnitude: &[T],
    prev_phase: &[T],
    hop: usize,
    window_length: usize,
) -> Result<Vec<T>> {
    PhaseUnwrapper {
        hop,
        window_length,
        peak_floor: T::zero(),
    }
    .unwrap_frame(magnitude, prev_phase)
}

/// Reconstructs a complex spectrogram of one source from its magnitude.
pub fn pu_reconstruct<T: Real>(
    magnitude: &MagnitudeSpectrogram<T>,
    onsets: &OnsetMask<T>,
    fallback: Option<&ComplexSpectrogram<T>>,
) -> Result<ComplexSpectrogram<T>> {
    PhaseUnwrapper::new(magnitude.config()).reconstruct(magnitude, onsets, fallback)
}

/// Onset frames of one source, with optional onset phases on the full grid
/// (only the columns of onset frames and frame 0 are read).
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetMask<T> {
    frames: BTreeSet<usize>,
    phases: Option<Array2<T>>,
}

impl<T: Real> Default for OnsetMask<T> {
    fn default() -> Self {
        Self {
            frames: BTreeSet::new(),
            phases: None,
        }
    }
}

impl<T: Real> OnsetMask<T> {
    pub fn new(frames: impl IntoIterator<Item = usize>) -> Self {
        Self {
            frames: frames.into_iter().collect(),
            phases: None,
        }
    }

    /// Attaches onset phases; values are wrapped into `]-pi, pi]`.
    pub fn with_phases(mut self, phases: Array2<T>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("onset phases"));
        }
        self.phases = Some(phases.mapv(wrap_phase));
        Ok(self)
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.frames.iter().copied()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.frames.contains(&t)
    }

    pub fn phases(&self) -> Option<&Array2<T>> {
        self.phases.as_ref()
    }

    pub fn phases_mut(&mut self) -> Option<&mut Array2<T>> {
        self.phases.as_mut()
    }

    pub fn without_phases(&self) -> Self {
        Self {
            frames: self.frames.clone(),
            phases: None,
        }
    }

    pub(crate) fn check(&self, bins: usize, frames: usize) -> Result<()> {
        if let Some(&t) = self.frames.iter().find(|&&t| t >= frames) {
            return Err(Error::OnsetOutOfRange { frame: t, frames });
        }
        if let Some(p) = &self.phases {
            if p.dim() != (bins, frames) {
                return Err(Error::DimensionMismatch {
                    expected: (bins, frames),
                    found: p.dim(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn fill_onset_phase(
        &self,
        t: usize,
        fallback: Option<&ComplexSpectrogram<T>>,
        out: &mut [T],
        source_index: usize,
    ) -> Result<()> {
        if let Some(p) = &self.phases {
            out.iter_mut().zip(p.column(t)).for_each(|(o, &v)| *o = v);
        } else if let Some(x) = fallback {
            out.iter_mut()
                .zip(x.frame(t))
                .for_each(|(o, c)| *o = c.arg());
        } else {
            return Err(Error::MissingOnsetPhase {
                source_index,
                frame: t,
            });
        }
        Ok(())
    }
}

/// Frames whose analysis window contains sample `position`.
pub fn frames_covering(
    config: &StftConfig,
    position: usize,
    frames: usize,
) -> impl Iterator<Item = usize> {
    let first = (position + 1)
        .saturating_sub(config.window_length())
        .div_ceil(config.hop());
    let last = position / config.hop();
    (first..=last).filter(move |&t| t < frames)
}

/// Absolute wrapped phase difference.
pub fn phase_error<T: Real>(a: T, b: T) -> T {
    wrap_phase(a - b).abs()
}
