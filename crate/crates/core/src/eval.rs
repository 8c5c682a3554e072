//! Energy-ratio separation metrics and experiment reports.
//!
//! References may only be rescaled, never filtered: the target component of
//! an estimate is its projection on its own reference, the interference is
//! the sum of its projections on every other reference (taken one by one),
//! and the remainder is counted as artifacts.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Value standing in for `+inf` dB when averaging.
pub const INFINITE_DB_SENTINEL: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BssScores {
    pub sdr: Vec<f64>,
    pub sir: Vec<f64>,
    pub sar: Vec<f64>,
}

impl BssScores {
    pub fn sources(&self) -> usize {
        self.sdr.len()
    }

    pub fn mean_sdr(&self) -> f64 {
        mean_db(&self.sdr)
    }

    pub fn mean_sir(&self) -> f64 {
        mean_db(&self.sir)
    }

    pub fn mean_sar(&self) -> f64 {
        mean_db(&self.sar)
    }
}

/// Mean of dB values with `+inf` replaced by [`INFINITE_DB_SENTINEL`].
pub fn mean_db(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values
        .iter()
        .map(|&v| {
            if v == f64::INFINITY {
                INFINITE_DB_SENTINEL
            } else {
                v
            }
        })
        .sum::<f64>()
        / values.len() as f64
}

/// `10 log10(num / den)` with `+inf` for a zero denominator. A zero numerator
/// is floored at the smallest positive normal, so a silent estimate gets a
/// very low finite score rather than `+inf` or NaN.
pub fn energy_ratio_db(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        10.0 * (f64::MIN_POSITIVE / den.max(f64::MIN_POSITIVE)).log10()
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x.to_f64_lossy() * y.to_f64_lossy())
        .sum()
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// SDR, SIR and SAR of every estimate against its reference.
pub fn bss_eval<T: Real, E: AsRef<[T]>, R: AsRef<[T]>>(
    estimates: &[E],
    references: &[R],
) -> Result<BssScores> {
    if estimates.len() != references.len() {
        return Err(Error::LengthMismatch {
            expected: references.len(),
            found: estimates.len(),
        });
    }
    if references.is_empty() {
        return Err(Error::NoSources);
    }
    let len = references[0].as_ref().len();
    for s in estimates
        .iter()
        .map(AsRef::as_ref)
        .chain(references.iter().map(AsRef::as_ref))
    {
        if s.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: s.len(),
            });
        }
    }
    let norms: Vec<f64> = references
        .iter()
        .map(|r| dot(r.as_ref(), r.as_ref()))
        .collect();
    if let Some(k) = norms.iter().position(|&n| n <= 0.0) {
        return Err(Error::ZeroReference(k));
    }

    let mut scores = BssScores {
        sdr: vec![],
        sir: vec![],
        sar: vec![],
    };
    for (k, estimate) in estimates.iter().map(AsRef::as_ref).enumerate() {
        let mut target = vec![0.0; len];
        let mut interference = vec![0.0; len];
        for (j, reference) in references.iter().map(AsRef::as_ref).enumerate() {
            let coef = dot(estimate, reference) / norms[j];
            let dst = if j == k {
                &mut target
            } else {
                &mut interference
            };
            for (d, &r) in dst.iter_mut().zip(reference) {
                *d += coef * r.to_f64_lossy();
            }
        }
        let artifacts: Vec<f64> = estimate
            .iter()
            .zip(&target)
            .zip(&interference)
            .map(|((&s, &t), &i)| s.to_f64_lossy() - t - i)
            .collect();
        let target_energy = energy(&target);
        let distortion: f64 = interference
            .iter()
            .zip(&artifacts)
            .map(|(i, a)| (i + a) * (i + a))
            .sum();
        let projected: f64 = target
            .iter()
            .zip(&interference)
            .map(|(t, i)| (t + i) * (t + i))
            .sum();
        scores.sdr.push(energy_ratio_db(target_energy, distortion));
        scores
            .sir
            .push(energy_ratio_db(target_energy, energy(&interference)));
        scores
            .sar
            .push(energy_ratio_db(projected, energy(&artifacts)));
    }
    Ok(scores)
}

/// Signal-to-distortion ratio of a single estimate against one reference.
pub fn sdr<T: Real>(estimate: &[T], reference: &[T]) -> Result<f64> {
    Ok(bss_eval(&[estimate], &[reference])?.sdr[0])
}

/// One row of a separation or reconstruction report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceRecord {
    pub name: String,
    pub sdr: Option<f64>,
    pub sir: Option<f64>,
    pub sar: Option<f64>,
    pub mixing_error: Option<f64>,
    pub inconsistency: Option<f64>,
    pub wall_time: Option<f64>,
}

impl SourceRecord {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    fn fields(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("sdr", self.sdr),
            ("sir", self.sir),
            ("sar", self.sar),
            ("mixing_error", self.mixing_error),
            ("inconsistency", self.inconsistency),
            ("wall_time", self.wall_time),
        ]
    }
}

/// Formats a value for reports: `inf`, `-inf`, `nan` or a plain decimal.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else if v != 0.0 && (v.abs() >= 1e6 || v.abs() < 1e-4) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

/// Line-oriented report, one line per source.
pub fn render_text(records: &[SourceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = write!(out, "{}", r.name);
        for (key, value) in r.fields() {
            if let Some(v) = value {
                let _ = write!(out, " {key}={}", format_value(v));
            }
        }
        out.push('\n');
    }
    out
}

/// Key-value report: one `[[source]]` table per record (valid TOML).
pub fn render_key_value(records: &[SourceRecord]) -> String {
    let mut out = String::new();
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("[[source]]\n");
        let _ = writeln!(
            out,
            "name = \"{}\"",
            r.name.replace('\\', "\\\\").replace('"', "\\\"")
        );
        for (key, value) in r.fields() {
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {}", toml_float(v));
            }
        }
    }
    out
}

fn toml_float(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:?}")
    }
}
