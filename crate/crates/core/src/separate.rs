//! Source separation under exact magnitude constraints.
//!
//! The mixing error `C = sum |X - sum_k Xk|^2` is minimized subject to
//! `|Xk| = Vk` by alternating two closed-form updates per time-frequency bin:
//!
//! ```text
//! Yk <- Xk + lambda_k (X - sum_l Xl)      lambda_k = Vk^2 / sum_l Vl^2
//! Xk <- Vk Yk / |Yk|
//! ```
//!
//! Each pair of updates is a majorize-minimize step, so `C` never increases
//! within a bin. The starting phases decide which of the many minima is
//! reached; [`pu_iter_separate`] starts from sinusoidal phase unwrapping.

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{wrap_phase, Real};
use crate::sinusoid::{OnsetMask, PhaseUnwrapper};
use crate::spectral::{ComplexSpectrogram, MagnitudeSpectrogram, Stft};

pub const DEFAULT_ITERATIONS: usize = 50;
pub const DEFAULT_GL_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Iterate each frame to completion before unwrapping into the next.
    #[default]
    Sequential,
    /// Unwrap whole spectrograms first, then iterate every bin.
    Batch,
}

/// Phases given to non-onset frames before iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initialization {
    #[default]
    PhaseUnwrapping,
    /// Uniform phases drawn from the problem seed.
    Random,
    /// Phase of the mixture in every source.
    Mixture,
}

fn sqrt_norm<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Weights `Vk^2 / sum_l Vl^2`, or `1/K` when every magnitude is zero.
pub fn source_weights<T: Real>(magnitudes: &[T]) -> Vec<T> {
    let mut w = Vec::with_capacity(magnitudes.len());
    fill_weights(magnitudes, &mut w);
    w
}

fn fill_weights<T: Real>(magnitudes: &[T], out: &mut Vec<T>) {
    out.clear();
    let total: T = magnitudes.iter().map(|&v| v * v).sum();
    if total > T::zero() {
        out.extend(magnitudes.iter().map(|&v| v * v / total));
    } else {
        let uniform = T::one() / T::from_usize_lossy(magnitudes.len().max(1));
        out.extend(magnitudes.iter().map(|_| uniform));
    }
}

/// One update of every source in a bin. Returns the squared mixing error
/// measured before the update.
#[inline]
fn update_bin<T: Real>(
    mixture: Complex<T>,
    magnitudes: &[T],
    weights: &[T],
    estimates: &mut [Complex<T>],
) -> T {
    let residual = estimates.iter().fold(mixture, |acc, &e| acc - e);
    for ((est, &v), &w) in estimates.iter_mut().zip(magnitudes).zip(weights) {
        let y = *est + residual * w;
        let n = sqrt_norm(y);
        *est = if n > T::zero() {
            y * (v / n)
        } else {
            let m = sqrt_norm(*est);
            if m > T::zero() {
                *est * (v / m)
            } else {
                Complex::new(v, T::zero())
            }
        };
    }
    residual.norm_sqr()
}

#[inline]
fn bin_error<T: Real>(mixture: Complex<T>, estimates: &[Complex<T>]) -> T {
    estimates.iter().fold(mixture, |acc, &e| acc - e).norm_sqr()
}

/// Complete state of one time-frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinState<T: Real> {
    mixture: Complex<T>,
    magnitudes: Vec<T>,
    weights: Vec<T>,
    estimates: Vec<Complex<T>>,
}

impl<T: Real> BinState<T> {
    pub fn new(
        mixture: Complex<T>,
        magnitudes: Vec<T>,
        estimates: Vec<Complex<T>>,
    ) -> Result<Self> {
        if magnitudes.is_empty() {
            return Err(Error::NoSources);
        }
        if magnitudes.len() != estimates.len() {
            return Err(Error::LengthMismatch {
                expected: magnitudes.len(),
                found: estimates.len(),
            });
        }
        if magnitudes.iter().any(|&v| v < T::zero() || !v.is_finite()) {
            return Err(Error::NegativeMagnitude("bin magnitudes"));
        }
        let weights = source_weights(&magnitudes);
        Ok(Self {
            mixture,
            magnitudes,
            weights,
            estimates,
        })
    }

    /// Estimates `Vk exp(i phase_k)`.
    pub fn from_phases(mixture: Complex<T>, magnitudes: Vec<T>, phases: &[T]) -> Result<Self> {
        let estimates = magnitudes
            .iter()
            .zip(phases)
            .map(|(&v, &p)| Complex::from_polar(v, p))
            .collect();
        Self::new(mixture, magnitudes, estimates)
    }

    pub fn mixture(&self) -> Complex<T> {
        self.mixture
    }

    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn estimates(&self) -> &[Complex<T>] {
        &self.estimates
    }

    /// `|X - sum_k Xk|^2`
    pub fn error(&self) -> T {
        bin_error(self.mixture, &self.estimates)
    }

    /// Auxiliary variables `Yk = Xk + lambda_k (X - sum_l Xl)`; they sum to `X`.
    pub fn auxiliary(&self) -> Vec<Complex<T>> {
        let residual = self.estimates.iter().fold(self.mixture, |acc, &e| acc - e);
        self.estimates
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| e + residual * w)
            .collect()
    }

    /// `sum_k |Yk - Xk|^2 / lambda_k` over sources with nonzero weight.
    pub fn auxiliary_cost(&self, auxiliary: &[Complex<T>]) -> T {
        auxiliary
            .iter()
            .zip(&self.estimates)
            .zip(&self.weights)
            .filter(|(_, &w)| w > T::zero())
            .map(|((&y, &e), &w)| (y - e).norm_sqr() / w)
            .sum()
    }

    /// One majorize-minimize step; see [`aux_iteration`].
    pub fn step(&self) -> Self {
        let mut next = self.clone();
        next.step_in_place();
        next
    }

    pub fn step_in_place(&mut self) {
        update_bin(
            self.mixture,
            &self.magnitudes,
            &self.weights,
            &mut self.estimates,
        );
    }
}

/// Y-update followed by the X-update on every source of one bin. Where
/// `Yk = 0` the previous phase of `Xk` is kept.
pub fn aux_iteration<T: Real>(state: &BinState<T>) -> BinState<T> {
    state.step()
}

fn check_sources<T: Real>(
    mixture: &ComplexSpectrogram<T>,
    magnitudes: &[MagnitudeSpectrogram<T>],
) -> Result<()> {
    if magnitudes.is_empty() {
        return Err(Error::NoSources);
    }
    for v in magnitudes {
        if v.dim() != mixture.dim() {
            return Err(Error::DimensionMismatch {
                expected: mixture.dim(),
                found: v.dim(),
            });
        }
    }
    Ok(())
}

/// Wiener estimates `X Vk^2 / sum_l Vl^2` (zero where every `Vl` vanishes).
pub fn wiener<T: Real>(
    mixture: &ComplexSpectrogram<T>,
    magnitudes: &[MagnitudeSpectrogram<T>],
) -> Result<Vec<ComplexSpectrogram<T>>> {
    check_sources(mixture, magnitudes)?;
    let mut total = Array2::<T>::zeros(mixture.dim());
    for v in magnitudes {
        Zip::from(&mut total)
            .and(v.data())
            .for_each(|s, &m| *s = *s + m * m);
    }
    magnitudes
        .iter()
        .map(|v| {
            let data = Zip::from(mixture.data())
                .and(v.data())
                .and(&total)
                .map_collect(|&x, &m, &s| {
                    if s > T::zero() {
                        x * (m * m / s)
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                });
            ComplexSpectrogram::new(data, *mixture.config())
        })
        .collect()
}

/// `sum_{f,t} |X - sum_k Xk|^2`
pub fn mixing_error<T: Real>(
    mixture: &ComplexSpectrogram<T>,
    estimates: &[ComplexSpectrogram<T>],
) -> Result<T> {
    let mut residual = mixture.data().clone();
    for e in estimates {
        if e.dim() != mixture.dim() {
            return Err(Error::DimensionMismatch {
                expected: mixture.dim(),
                found: e.dim(),
            });
        }
        ndarray::Zip::from(&mut residual)
            .and(e.data())
            .for_each(|r, &v| *r = *r - v);
    }
    Ok(residual.iter().map(|c| c.norm_sqr()).sum())
}

/// Inputs of the iterative separation.
#[derive(Debug, Clone)]
pub struct SeparationProblem<T: Real> {
    pub mixture: ComplexSpectrogram<T>,
    pub magnitudes: Vec<MagnitudeSpectrogram<T>>,
    pub onsets: Vec<OnsetMask<T>>,
    pub iterations: usize,
    pub schedule: Schedule,
    pub initialization: Initialization,
    /// Use the mixture phase in onset frames of sources without onset phases.
    pub mixture_onset_fallback: bool,
    /// Seed for [`Initialization::Random`].
    pub seed: u64,
    pub peak_floor: T,
}

impl<T: Real> SeparationProblem<T> {
    pub fn new(
        mixture: ComplexSpectrogram<T>,
        magnitudes: Vec<MagnitudeSpectrogram<T>>,
        onsets: Vec<OnsetMask<T>>,
    ) -> Result<Self> {
        check_sources(&mixture, &magnitudes)?;
        if onsets.len() != magnitudes.len() {
            return Err(Error::LengthMismatch {
                expected: magnitudes.len(),
                found: onsets.len(),
            });
        }
        for o in &onsets {
            o.check(mixture.bins(), mixture.frames())?;
        }
        Ok(Self {
            mixture,
            magnitudes,
            onsets,
            iterations: DEFAULT_ITERATIONS,
            schedule: Schedule::default(),
            initialization: Initialization::default(),
            mixture_onset_fallback: true,
            seed: 0,
            peak_floor: T::zero(),
        })
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_initialization(mut self, initialization: Initialization, seed: u64) -> Self {
        self.initialization = initialization;
        self.seed = seed;
        self
    }

    pub fn with_mixture_onset_fallback(mut self, enabled: bool) -> Self {
        self.mixture_onset_fallback = enabled;
        self
    }

    pub fn sources(&self) -> usize {
        self.magnitudes.len()
    }

    fn fallback(&self) -> Option<&ComplexSpectrogram<T>> {
        self.mixture_onset_fallback.then_some(&self.mixture)
    }
}

#[derive(Debug, Clone)]
pub struct Separation<T: Real> {
    pub estimates: Vec<ComplexSpectrogram<T>>,
    /// Total mixing error after each iteration; entry 0 is the initialization.
    pub cost_history: Vec<T>,
}

/// Buffers for a run of bins laid out bin-major: index `f * K + k`.
struct FrameWork<T: Real> {
    sources: usize,
    magnitudes: Vec<T>,
    weights: Vec<T>,
    estimates: Vec<Complex<T>>,
    mixture: Vec<Complex<T>>,
}

impl<T: Real> FrameWork<T> {
    fn new(bins: usize, sources: usize) -> Self {
        Self {
            sources,
            magnitudes: vec![T::zero(); bins * sources],
            weights: vec![T::zero(); bins * sources],
            estimates: vec![Complex::new(T::zero(), T::zero()); bins * sources],
            mixture: vec![Complex::new(T::zero(), T::zero()); bins],
        }
    }

    /// Loads frame `t` into cells starting at `offset` bins.
    fn load(&mut self, problem: &SeparationProblem<T>, t: usize, offset: usize, phases: &[Vec<T>]) {
        let k_count = self.sources;
        for (f, x) in problem.mixture.frame(t).iter().enumerate() {
            self.mixture[offset + f] = *x;
        }
        for (k, v) in problem.magnitudes.iter().enumerate() {
            for (f, &m) in v.frame(t).iter().enumerate() {
                let i = (offset + f) * k_count + k;
                self.magnitudes[i] = m;
                self.estimates[i] = Complex::from_polar(m, phases[k][f]);
            }
        }
        let bins = problem.mixture.bins();
        let cells = offset * k_count..(offset + bins) * k_count;
        let mut w = Vec::with_capacity(k_count);
        for (mags, weights) in self.magnitudes[cells.clone()]
            .chunks(k_count)
            .zip(self.weights[cells].chunks_mut(k_count))
        {
            fill_weights(mags, &mut w);
            weights.copy_from_slice(&w);
        }
    }

    /// Runs `iterations` updates on every bin; adds per-iteration errors to `history`.
    fn iterate(&mut self, iterations: usize, history: &mut [T]) {
        let k_count = self.sources;
        let per_frame = self
            .estimates
            .par_chunks_mut(k_count)
            .zip(self.magnitudes.par_chunks(k_count))
            .zip(self.weights.par_chunks(k_count))
            .zip(self.mixture.par_iter())
            .fold(
                || vec![T::zero(); iterations + 1],
                |mut acc, (((est, mags), weights), &x)| {
                    for slot in acc.iter_mut().take(iterations) {
                        *slot = *slot + update_bin(x, mags, weights, est);
                    }
                    acc[iterations] = acc[iterations] + bin_error(x, est);
                    acc
                },
            )
            .reduce(
                || vec![T::zero(); iterations + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + y);
                    a
                },
            );
        history
            .iter_mut()
            .zip(per_frame)
            .for_each(|(h, c)| *h = *h + c);
    }

    /// Copies the cells of frame `t` (starting at `offset` bins) to the outputs.
    fn store(&self, t: usize, offset: usize, outputs: &mut [Array2<Complex<T>>]) {
        let k_count = self.sources;
        for (k, out) in outputs.iter_mut().enumerate() {
            for (f, dst) in out.column_mut(t).iter_mut().enumerate() {
                *dst = self.estimates[(offset + f) * k_count + k];
            }
        }
    }

    /// Refined phases of the bins with nonzero magnitude, for unwrapping the next frame.
    fn refresh_phases(&self, phases: &mut [Vec<T>]) {
        let k_count = self.sources;
        for (k, phase) in phases.iter_mut().enumerate() {
            for (f, p) in phase.iter_mut().enumerate() {
                if self.magnitudes[f * k_count + k] > T::zero() {
                    *p = self.estimates[f * k_count + k].arg();
                }
            }
        }
    }
}

/// Uniform draw in `]-pi, pi]`.
pub fn random_phase<T: Real>(rng: &mut impl Rng) -> T {
    wrap_phase(T::lit(
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    ))
}

fn initial_frame_phase<T: Real>(
    problem: &SeparationProblem<T>,
    unwrapper: &PhaseUnwrapper<T>,
    rng: &mut ChaCha8Rng,
    k: usize,
    t: usize,
    phase: &mut [T],
    column: &mut [T],
) -> Result<()> {
    let onsets = &problem.onsets[k];
    if t == 0 || onsets.contains(t) {
        return onsets.fill_onset_phase(t, problem.fallback(), phase, k);
    }
    match problem.initialization {
        Initialization::PhaseUnwrapping => {
            column
                .iter_mut()
                .zip(problem.magnitudes[k].frame(t))
                .for_each(|(c, &v)| *c = v);
            unwrapper.unwrap_in_place(column, phase)
        }
        Initialization::Random => {
            phase.iter_mut().for_each(|p| *p = random_phase(rng));
            Ok(())
        }
        Initialization::Mixture => {
            phase
                .iter_mut()
                .zip(problem.mixture.frame(t))
                .for_each(|(p, x)| *p = x.arg());
            Ok(())
        }
    }
}

/// Phase-unwrapping initialized iterative separation.
///
/// Output magnitudes equal the constraints `Vk` to rounding, and the mixing
/// error is non-increasing over iterations in every bin.
pub fn pu_iter_separate<T: Real>(problem: &SeparationProblem<T>) -> Result<Separation<T>> {
    let (bins, frames) = problem.mixture.dim();
    let k_count = problem.sources();
    let unwrapper =
        PhaseUnwrapper::new(problem.mixture.config()).with_peak_floor(problem.peak_floor);
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut outputs =
        vec![Array2::from_elem((bins, frames), Complex::new(T::zero(), T::zero())); k_count];
    let mut history = vec![T::zero(); problem.iterations + 1];
    let mut phases = vec![vec![T::zero(); bins]; k_count];
    let mut column = vec![T::zero(); bins];

    match problem.schedule {
        Schedule::Sequential => {
            let mut work = FrameWork::new(bins, k_count);
            for t in 0..frames {
                for (k, phase) in phases.iter_mut().enumerate() {
                    initial_frame_phase(problem, &unwrapper, &mut rng, k, t, phase, &mut column)?;
                }
                work.load(problem, t, 0, &phases);
                work.iterate(problem.iterations, &mut history);
                work.store(t, 0, &mut outputs);
                work.refresh_phases(&mut phases);
            }
        }
        Schedule::Batch => {
            // All frames are initialized up front and then updated as one grid.
            let mut work = FrameWork::new(bins * frames, k_count);
            for t in 0..frames {
                for (k, phase) in phases.iter_mut().enumerate() {
                    initial_frame_phase(problem, &unwrapper, &mut rng, k, t, phase, &mut column)?;
                }
                work.load(problem, t, t * bins, &phases);
            }
            work.iterate(problem.iterations, &mut history);
            for t in 0..frames {
                work.store(t, t * bins, &mut outputs);
            }
        }
    }

    let config = *problem.mixture.config();
    let estimates = outputs
        .into_iter()
        .map(|data| ComplexSpectrogram::new(data, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(Separation {
        estimates,
        cost_history: history,
    })
}

/// Adds centered Gaussian noise of standard deviation `2 pi epsilon` to the
/// onset phases of frame 0 and of every onset frame. Masks without phases
/// first take the phase of `fallback`.
pub fn perturb_onset_phases<T: Real>(
    onsets: &mut OnsetMask<T>,
    fallback: Option<&ComplexSpectrogram<T>>,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    if onsets.phases().is_none() {
        let x = fallback.ok_or(Error::MissingOnsetPhase {
            source_index: 0,
            frame: 0,
        })?;
        *onsets = onsets.clone().with_phases(x.phase())?;
    }
    if epsilon <= 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, std::f64::consts::TAU * epsilon)
        .map_err(|e| Error::Format(e.to_string()))?;
    let frames: Vec<usize> = std::iter::once(0)
        .chain(onsets.frames().filter(|&t| t != 0))
        .collect();
    let phases = onsets.phases_mut().expect("phases present");
    for t in frames {
        if t >= phases.ncols() {
            continue;
        }
        for p in phases.column_mut(t).iter_mut() {
            *p = wrap_phase(*p + T::lit(normal.sample(rng)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GriffinLim<T: Real> {
    pub estimate: ComplexSpectrogram<T>,
    /// Inconsistency of each iterate, starting with the initialization.
    pub inconsistency: Vec<T>,
}

/// Griffin-Lim: alternates the consistent projection with reimposing `V`.
/// Bins where the projection vanishes keep their previous phase.
pub fn gl_reconstruct<T: Real>(
    magnitude: &MagnitudeSpectrogram<T>,
    initial_phase: &Array2<T>,
    iterations: usize,
) -> Result<GriffinLim<T>> {
    let engine = Stft::new(*magnitude.config());
    let mut current = ComplexSpectrogram::from_polar(magnitude, initial_phase)?;
    let mut phase = initial_phase.clone();
    let mut history = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let projected = engine.project(&current)?;
        history.push(current.squared_distance(&projected)?);
        Zip::from(&mut phase)
            .and(projected.data())
            .for_each(|p, c| {
                if c.norm_sqr() > T::zero() {
                    *p = c.arg();
                }
            });
        current = ComplexSpectrogram::from_polar(magnitude, &phase)?;
    }
    history.push(engine.inconsistency(&current)?);
    Ok(GriffinLim {
        estimate: current,
        inconsistency: history,
    })
}

/// Replaces the phase of every frame outside `keep` (and other than frame 0)
/// by uniform random values.
pub fn corrupt_phases<T: Real>(
    spec: &ComplexSpectrogram<T>,
    keep: &OnsetMask<T>,
    rng: &mut impl Rng,
) -> Result<ComplexSpectrogram<T>> {
    let mut phase = spec.phase();
    for (t, mut column) in phase.axis_iter_mut(Axis(1)).enumerate() {
        if t == 0 || keep.contains(t) {
            continue;
        }
        column.iter_mut().for_each(|p| *p = random_phase(rng));
    }
    ComplexSpectrogram::from_polar(&spec.magnitude(), &phase)
}
