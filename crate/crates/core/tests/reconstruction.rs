use ndarray::Array2;
use phasesep::eval::sdr;
use phasesep::separate::{corrupt_phases, gl_reconstruct};
use phasesep::sinusoid::{phase_error, pu_reconstruct};
use phasesep::spectral::pad_edges;
use phasesep::synth::attack_frames;
use phasesep::{OnsetMask, Stft, StftConfig, WindowKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tone(freq: f64, len: usize, sr: u32) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (std::f64::consts::TAU * freq * n as f64 / sr as f64 + 0.4).sin())
        .collect()
}

#[test]
fn unwrapping_recovers_a_stationary_tone() {
    let config = StftConfig::new(WindowKind::Hann, 1024, 256, 16_000).unwrap();
    let engine = Stft::new(config);
    // bin 28 exactly, with no edge inside any frame: every frame is stationary
    let signal = tone(437.5, 1024 + 59 * 256, 16_000);
    let reference = engine.analyze(&signal).unwrap();
    assert_eq!(reference.frames(), 60);
    let onsets = OnsetMask::new([0]).with_phases(reference.phase()).unwrap();
    let estimate = pu_reconstruct(&reference.magnitude(), &onsets, None).unwrap();
    let out = engine.synthesize(&estimate).unwrap();
    let score = sdr(&out, &signal).unwrap();
    assert!(score >= 30.0, "sdr {score}");
}

#[test]
fn off_bin_tone_drifts_by_the_interpolation_bias() {
    let config = StftConfig::new(WindowKind::Hann, 1024, 256, 16_000).unwrap();
    let engine = Stft::new(config);
    let margin = config.edge_margin();
    let reference = engine
        .analyze(&pad_edges(&tone(441.3, 16_000, 16_000), margin))
        .unwrap();
    let frames = attack_frames(&config, &[margin], reference.frames());
    let onsets = OnsetMask::new(frames)
        .with_phases(reference.phase())
        .unwrap();
    let estimate = pu_reconstruct(&reference.magnitude(), &onsets, None).unwrap();
    let (a, b) = (estimate.phase(), reference.phase());
    let bin = 28;
    let drift = |t: usize| phase_error(a[[bin, t]], b[[bin, t]]);
    // steady per-frame drift well under 0.05 rad, but it accumulates
    let per_frame = (drift(40) - drift(20)) / 20.0;
    assert!(per_frame.abs() < 0.05, "{per_frame}");
    assert!(drift(40).abs() > 0.5);
}

#[test]
fn griffin_lim_lowers_inconsistency_of_random_phases() {
    let config = StftConfig::new(WindowKind::Hann, 512, 128, 16_000).unwrap();
    let engine = Stft::new(config);
    let signal: Vec<f64> = tone(300.0, 8000, 16_000)
        .iter()
        .zip(tone(1210.0, 8000, 16_000))
        .map(|(a, b)| a + 0.5 * b)
        .collect();
    let spec = engine.analyze(&signal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corrupted = corrupt_phases(&spec, &OnsetMask::new([]), &mut rng).unwrap();
    let out = gl_reconstruct(&spec.magnitude(), &corrupted.phase(), 30).unwrap();
    let first = out.inconsistency[0];
    let last = *out.inconsistency.last().unwrap();
    assert_eq!(out.inconsistency.len(), 31);
    assert!(last < 0.5 * first, "{first} -> {last}");
    let v = spec.magnitude();
    for (a, b) in out.estimate.magnitude().data().iter().zip(v.data()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }
}

#[test]
fn griffin_lim_without_iterations_returns_its_initialization() {
    let config = StftConfig::new(WindowKind::Hann, 256, 64, 8000).unwrap();
    let spec = Stft::new(config).analyze(&tone(500.0, 2000, 8000)).unwrap();
    let phase = Array2::from_elem(spec.dim(), 0.25);
    let out = gl_reconstruct(&spec.magnitude(), &phase, 0).unwrap();
    assert_eq!(out.inconsistency.len(), 1);
    let mags = spec.magnitude();
    for ((a, b), m) in out.estimate.phase().iter().zip(&phase).zip(mags.data()) {
        if *m > 0.0 {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
