//! Synthetic test material: mixtures of harmonic notes with known attack times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::StftConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Note {
    /// First sample of the attack.
    pub start: usize,
    /// Length in samples, release included.
    pub duration: usize,
    /// Fundamental frequency in Hz.
    pub frequency: f64,
    /// `(frequency ratio, amplitude)` of each partial.
    pub partials: Vec<(f64, f64)>,
    pub phase: f64,
    /// Exponential decay time constant in seconds.
    pub decay: f64,
}

const ATTACK_SECONDS: f64 = 0.005;
const RELEASE_SECONDS: f64 = 0.02;

impl Note {
    /// Adds the note into `out`.
    pub fn render_into(&self, out: &mut [f64], sample_rate: u32) {
        let sr = sample_rate as f64;
        let attack = (ATTACK_SECONDS * sr).max(1.0);
        let release = (RELEASE_SECONDS * sr).max(1.0);
        let end = (self.start + self.duration).min(out.len());
        for (n, slot) in out.iter_mut().enumerate().take(end).skip(self.start) {
            let i = (n - self.start) as f64;
            let remaining = (end - n) as f64;
            let envelope = (i / attack).min(1.0)
                * (remaining / release).min(1.0)
                * (-i / (self.decay * sr)).exp();
            let t = n as f64 / sr;
            let value: f64 = self
                .partials
                .iter()
                .map(|&(ratio, amp)| {
                    amp * (std::f64::consts::TAU * self.frequency * ratio * t + self.phase * ratio)
                        .sin()
                })
                .sum();
            *slot += envelope * value;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSource {
    pub samples: Vec<f64>,
    pub notes: Vec<Note>,
}

impl SyntheticSource {
    pub fn render(notes: Vec<Note>, len: usize, sample_rate: u32) -> Self {
        let mut samples = vec![0.0; len];
        for note in &notes {
            note.render_into(&mut samples, sample_rate);
        }
        Self { samples, notes }
    }

    pub fn attack_samples(&self) -> Vec<usize> {
        self.notes.iter().map(|n| n.start).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMixture {
    pub sources: Vec<SyntheticSource>,
    pub sample_rate: u32,
}

impl SyntheticMixture {
    pub fn len(&self) -> usize {
        self.sources.first().map_or(0, |s| s.samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mixture(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for s in &self.sources {
            out.iter_mut().zip(&s.samples).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Parameters of [`note_mixture`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub sources: usize,
    pub seconds: f64,
    pub sample_rate: u32,
    pub notes_per_source: usize,
    /// Range of fundamentals in Hz.
    pub min_frequency: f64,
    pub max_frequency: f64,
    pub partials: usize,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            sources: 4,
            seconds: 2.0,
            sample_rate: 16_000,
            notes_per_source: 3,
            min_frequency: 150.0,
            max_frequency: 600.0,
            partials: 3,
        }
    }
}

/// Random mixture of harmonic notes. Notes within a source follow each other;
/// sources overlap freely in time and frequency.
pub fn note_mixture(spec: &MixtureSpec, seed: u64) -> SyntheticMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (spec.seconds * spec.sample_rate as f64).round() as usize;
    let slot = len / spec.notes_per_source.max(1);
    let sources = (0..spec.sources)
        .map(|_| {
            let notes = (0..spec.notes_per_source)
                .map(|i| {
                    let jitter = rng.random_range(0..=slot / 4);
                    let start = i * slot + jitter;
                    let duration = slot - jitter + rng.random_range(0..=slot / 4);
                    let frequency = spec.min_frequency
                        * (spec.max_frequency / spec.min_frequency).powf(rng.random::<f64>());
                    let partials = (1..=spec.partials)
                        .map(|h| (h as f64, rng.random_range(0.5..1.0) / h as f64))
                        .collect();
                    Note {
                        start,
                        duration,
                        frequency,
                        partials,
                        phase: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                        decay: rng.random_range(0.4..1.5),
                    }
                })
                .collect();
            SyntheticSource::render(notes, len, spec.sample_rate)
        })
        .collect();
    SyntheticMixture {
        sources,
        sample_rate: spec.sample_rate,
    }
}

/// Sources made of single stationary tones in disjoint frequency bands, so
/// no two sources share a time-frequency region.
pub fn disjoint_tones(
    sources: usize,
    seconds: f64,
    sample_rate: u32,
    window_length: usize,
) -> SyntheticMixture {
    let len = (seconds * sample_rate as f64).round() as usize;
    let bin_hz = sample_rate as f64 / window_length as f64;
    let sources = (0..sources)
        .map(|k| {
            let bin = 24.0 + 40.0 * k as f64 + 0.37;
            let note = Note {
                start: 0,
                duration: len,
                frequency: bin * bin_hz,
                partials: vec![(1.0, 0.5)],
                phase: 0.3 * k as f64,
                decay: 1e9,
            };
            SyntheticSource::render(vec![note], len, sample_rate)
        })
        .collect();
    SyntheticMixture {
        sources,
        sample_rate,
    }
}

/// Frames of `config` whose window contains at least one attack sample
/// (sample positions are in the analyzed signal's coordinates). Frame 0 is
/// always included.
pub fn attack_frames(config: &StftConfig, attacks: &[usize], frames: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::once(0)
        .chain(
            attacks
                .iter()
                .flat_map(|&a| crate::sinusoid::frames_covering(config, a, frames)),
        )
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WindowKind;

    #[test]
    fn deterministic() {
        let spec = MixtureSpec {
            seconds: 0.5,
            ..MixtureSpec::default()
        };
        assert_eq!(note_mixture(&spec, 4), note_mixture(&spec, 4));
        assert_ne!(note_mixture(&spec, 4), note_mixture(&spec, 5));
    }

    #[test]
    fn mixture_is_sum() {
        let m = note_mixture(
            &MixtureSpec {
                seconds: 0.25,
                ..MixtureSpec::default()
            },
            1,
        );
        let x = m.mixture();
        let n = 1000;
        let s: f64 = m.sources.iter().map(|s| s.samples[n]).sum();
        assert_eq!(x[n], s);
        assert!(m
            .sources
            .iter()
            .all(|s| s.samples.iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn attack_frames_cover() {
        let c = StftConfig::with_default_hop(WindowKind::Hann, 64, 1).unwrap();
        assert_eq!(attack_frames(&c, &[100], 50), vec![0, 3, 4, 5, 6]);
        assert_eq!(attack_frames(&c, &[100, 10], 5), vec![0, 3, 4]);
    }
}
