//! Signal-level experiment plumbing shared by the commands and the acceptance
//! suite: padded analysis, oracle onset masks, resynthesis and scoring.

use phasesep::eval::{bss_eval, BssScores};
use phasesep::separate::{pu_iter_separate, SeparationProblem};
use phasesep::sinusoid::frames_covering;
use phasesep::spectral::{pad_edges, trim_edges};
use phasesep::{ComplexSpectrogram, MagnitudeSpectrogram, OnsetMask, Result, Stft, StftConfig};

/// A mixture and optional reference sources analyzed on a zero-padded
/// support, so every original sample lies under a full set of frames.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub engine: Stft<f64>,
    /// Original signal length in samples.
    pub len: usize,
    pub margin: usize,
    pub mixture: ComplexSpectrogram<f64>,
    pub sources: Vec<ComplexSpectrogram<f64>>,
}

impl Analysis {
    pub fn new(config: StftConfig, mixture: &[f64], sources: &[Vec<f64>]) -> Result<Self> {
        let engine = Stft::new(config);
        let margin = config.edge_margin();
        let mixture_spec = engine.analyze(&pad_edges(mixture, margin))?;
        let sources = sources
            .iter()
            .map(|s| engine.analyze(&pad_edges(s, margin)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            engine,
            len: mixture.len(),
            margin,
            mixture: mixture_spec,
            sources,
        })
    }

    pub fn config(&self) -> &StftConfig {
        self.engine.config()
    }

    pub fn frames(&self) -> usize {
        self.mixture.frames()
    }

    pub fn source_magnitudes(&self) -> Vec<MagnitudeSpectrogram<f64>> {
        self.sources
            .iter()
            .map(ComplexSpectrogram::magnitude)
            .collect()
    }

    /// Inverse STFT cut back to the original support.
    pub fn resynthesize(&self, spec: &ComplexSpectrogram<f64>) -> Result<Vec<f64>> {
        Ok(trim_edges(
            &self.engine.synthesize(spec)?,
            self.margin,
            self.len,
        ))
    }

    /// Frames whose window contains an attack at sample `position` of the
    /// original signal.
    pub fn attack_frames(&self, attacks: &[usize]) -> Vec<usize> {
        let mut frames: Vec<usize> = attacks
            .iter()
            .flat_map(|&a| frames_covering(self.config(), a + self.margin, self.frames()))
            .collect();
        frames.sort_unstable();
        frames.dedup();
        frames
    }

    /// Onset masks of the sources at their attack frames, carrying the
    /// phases of the reference STFTs.
    pub fn oracle_onsets(&self, attacks: &[Vec<usize>]) -> Result<Vec<OnsetMask<f64>>> {
        self.sources
            .iter()
            .zip(attacks)
            .map(|(s, a)| OnsetMask::new(self.attack_frames(a)).with_phases(s.phase()))
            .collect()
    }

    pub fn score(&self, estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<BssScores> {
        bss_eval(estimates, references)
    }
}

/// Runs the iterative separation and returns the time-domain stems.
pub fn separate_signals(
    analysis: &Analysis,
    problem: &SeparationProblem<f64>,
) -> Result<Vec<Vec<f64>>> {
    let out = pu_iter_separate(problem)?;
    out.estimates
        .iter()
        .map(|e| analysis.resynthesize(e))
        .collect()
}
