//! WAV input and output. Everything is processed as mono `f64` in `[-1, 1]`.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Reads 16 or 24-bit PCM or 32-bit float. Multichannel files are averaged
/// down to mono with a warning on stderr.
pub fn read_wav(path: &Path) -> CliResult<Audio> {
    let mut reader = WavReader::open(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()?
        }
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (format, bits) => {
            return Err(CliError::input(format!(
                "{}: unsupported encoding {bits}-bit {format:?}",
                path.display()
            )))
        }
    };
    let channels = usize::from(spec.channels.max(1));
    if channels > 1 {
        eprintln!(
            "warning: {} has {channels} channels, mixing down to mono",
            path.display()
        );
    }
    let samples = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Writes 16-bit PCM, clipping to full scale. No dither.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> CliResult<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in samples {
        writer.write_sample(quantize(s))?;
    }
    writer.finalize()?;
    Ok(())
}

/// Same `2^15` scale as [`read_wav`], so 16-bit values survive a round trip.
pub fn quantize(sample: f64) -> i16 {
    (sample * 32768.0)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Loads several files that must share a sample rate; shorter ones are
/// zero-padded to the longest.
pub fn read_group(paths: &[impl AsRef<Path>]) -> CliResult<(Vec<Vec<f64>>, u32)> {
    let audio = paths
        .iter()
        .map(|p| read_wav(p.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;
    let rate = audio
        .first()
        .map(|a| a.sample_rate)
        .ok_or_else(|| CliError::input("no input files"))?;
    if let Some((a, p)) = audio.iter().zip(paths).find(|(a, _)| a.sample_rate != rate) {
        return Err(CliError::input(format!(
            "{}: sample rate {} differs from {rate}",
            p.as_ref().display(),
            a.sample_rate
        )));
    }
    let len = audio.iter().map(|a| a.samples.len()).max().unwrap_or(0);
    let signals = audio
        .into_iter()
        .map(|mut a| {
            a.samples.resize(len, 0.0);
            a.samples
        })
        .collect();
    Ok((signals, rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_clips_and_rounds() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.5), i16::MAX);
        assert_eq!(quantize(-1.5), i16::MIN);
        assert_eq!(quantize(1.0), i16::MAX);
        assert_eq!(quantize(0.5 / 32768.0 + 1e-9), 1);
        assert_eq!(quantize(-123.0 / 32768.0), -123);
    }
}
