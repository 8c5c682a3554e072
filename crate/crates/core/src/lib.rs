//! Phase recovery for magnitude spectrograms and audio source separation
//! under exact per-source magnitude constraints.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below name the double-precision instantiations used by the CLI.

pub mod error;
pub mod eval;
pub mod io;
pub mod magnitude;
pub mod onset;
pub mod scalar;
pub mod separate;
pub mod sinusoid;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;
pub use sinusoid::OnsetMask;
pub use spectral::{ComplexSpectrogram, MagnitudeSpectrogram, Stft, StftConfig, WindowKind};

pub use num_complex::Complex;

pub type ComplexSpectrogramF64 = ComplexSpectrogram<f64>;
pub type MagnitudeSpectrogramF64 = MagnitudeSpectrogram<f64>;
pub type StftF64 = Stft<f64>;
pub type OnsetMaskF64 = OnsetMask<f64>;
pub type SeparationProblemF64 = separate::SeparationProblem<f64>;
pub type BinStateF64 = separate::BinState<f64>;
pub type NmfModelF64 = magnitude::NmfModel<f64>;

pub type ComplexSpectrogramF32 = ComplexSpectrogram<f32>;
pub type MagnitudeSpectrogramF32 = MagnitudeSpectrogram<f32>;
pub type StftF32 = Stft<f32>;
