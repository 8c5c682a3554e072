//! Command-line surface.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phasesep::eval::{bss_eval, render_key_value, render_text, SourceRecord};
use phasesep::io::{
    format_onset_masks, load_grid, parse_onset_masks, save_complex, save_real, Grid,
};
use phasesep::magnitude::{nmf_magnitude, DEFAULT_NMF_ITERATIONS, DEFAULT_NMF_RANK};
use phasesep::onset::{detect_onset_frames, DEFAULT_MEDIAN_HALFWIDTH, DEFAULT_THRESHOLD_FACTOR};
use phasesep::separate::{
    gl_reconstruct, mixing_error, perturb_onset_phases, pu_iter_separate, random_phase, wiener,
    Initialization, Schedule, SeparationProblem, DEFAULT_GL_ITERATIONS, DEFAULT_ITERATIONS,
};
use phasesep::sinusoid::PhaseUnwrapper;
use phasesep::synth::{note_mixture, MixtureSpec};
use phasesep::{ComplexSpectrogram, MagnitudeSpectrogram, OnsetMask, Stft, StftConfig, WindowKind};

use crate::audio::{read_group, read_wav, write_wav};
use crate::error::{CliError, CliResult};
use crate::experiment::Analysis;

#[derive(Debug, Parser)]
#[command(
    name = "phasesep",
    version,
    about = "STFT phase recovery and magnitude-constrained source separation"
)]
pub struct Cli {
    /// Worker threads for per-bin and per-source work.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rebuild a signal from its magnitude spectrogram.
    Reconstruct(ReconstructArgs),
    /// Split a mixture into sources with known or estimated magnitudes.
    Separate(SeparateArgs),
    /// Score estimates against references.
    Evaluate(EvaluateArgs),
    /// Detect onset frames and write an onset-mask file.
    Onsets(OnsetsArgs),
    /// Write the STFT of a WAV file as a PRSG grid.
    Analyze(AnalyzeArgs),
    /// Render a synthetic mixture of harmonic notes.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StftArgs {
    #[arg(long, default_value_t = StftConfig::DEFAULT_WINDOW_LENGTH)]
    pub window: usize,
    #[arg(long, default_value_t = StftConfig::DEFAULT_WINDOW_LENGTH / 4)]
    pub hop: usize,
    #[arg(long = "window-kind", default_value_t = WindowKind::Hann)]
    pub window_kind: WindowKind,
}

impl StftArgs {
    pub fn config(&self, sample_rate: u32) -> CliResult<StftConfig> {
        Ok(StftConfig::new(
            self.window_kind,
            self.window,
            self.hop,
            sample_rate,
        )?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OnsetArgs {
    /// Onset-mask file, one line of frame indices per source. Detected from
    /// the magnitudes when absent.
    #[arg(long)]
    pub onsets: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub onset_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_HALFWIDTH)]
    pub onset_median: usize,
    /// Gaussian noise of standard deviation 2*pi*EPS added to onset phases.
    #[arg(long, value_name = "EPS", default_value_t = 0.0)]
    pub onset_noise: f64,
}

impl OnsetArgs {
    /// Onset frames of every magnitude, from the mask file or the detector.
    fn frames(&self, magnitudes: &[MagnitudeSpectrogram<f64>]) -> CliResult<Vec<Vec<usize>>> {
        match &self.onsets {
            Some(path) => {
                let masks = parse_onset_masks(&fs::read_to_string(path)?)?;
                if masks.len() != magnitudes.len() {
                    return Err(CliError::input(format!(
                        "{}: {} onset lines for {} sources",
                        path.display(),
                        masks.len(),
                        magnitudes.len()
                    )));
                }
                Ok(masks)
            }
            None => Ok(magnitudes
                .iter()
                .map(|v| detect_onset_frames(v, self.onset_threshold, self.onset_median))
                .collect()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Text report destination; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Key-value (TOML) report destination.
    #[arg(long)]
    pub report_kv: Option<PathBuf>,
    /// Include wall-clock time in reports.
    #[arg(long)]
    pub timing: bool,
}

impl ReportArgs {
    fn emit(&self, records: &[SourceRecord]) -> CliResult<()> {
        let text = render_text(records);
        match &self.report {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        if let Some(path) = &self.report_kv {
            fs::write(path, render_key_value(records))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconstructMethod {
    Pu,
    Gl,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    /// Signal whose magnitude is reconstructed; also the reference for scoring.
    #[arg(
        long,
        required_unless_present = "spectrogram",
        conflicts_with = "spectrogram"
    )]
    pub input: Option<PathBuf>,
    /// PRSG grid (real magnitude or complex STFT) on the padded analysis support.
    #[arg(long)]
    pub spectrogram: Option<PathBuf>,
    /// Sample rate of PRSG input.
    #[arg(long, default_value_t = 44_100)]
    pub sample_rate: u32,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ReconstructMethod::Pu)]
    pub method: ReconstructMethod,
    /// Griffin-Lim iterations.
    #[arg(long, default_value_t = DEFAULT_GL_ITERATIONS)]
    pub iters: usize,
    /// Start Griffin-Lim from random phases outside onset frames (zero otherwise).
    #[arg(long)]
    pub corrupt: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub stft: StftArgs,
    #[command(flatten)]
    pub onset: OnsetArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeparateMethod {
    Wiener,
    PuIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Pu,
    Random,
    Mixture,
}

impl From<InitArg> for Initialization {
    fn from(arg: InitArg) -> Self {
        match arg {
            InitArg::Pu => Initialization::PhaseUnwrapping,
            InitArg::Random => Initialization::Random,
            InitArg::Mixture => Initialization::Mixture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Sequential,
    Batch,
}

impl From<ScheduleArg> for Schedule {
    fn from(arg: ScheduleArg) -> Self {
        match arg {
            ScheduleArg::Sequential => Schedule::Sequential,
            ScheduleArg::Batch => Schedule::Batch,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    /// Reference source signals: oracle magnitudes and scoring.
    #[arg(long, num_args = 1..)]
    pub references: Vec<PathBuf>,
    /// PRSG magnitude grids, one per source; replaces reference magnitudes.
    #[arg(long, num_args = 1..)]
    pub magnitudes: Vec<PathBuf>,
    /// Replace reference magnitudes by KL-NMF approximations.
    #[arg(long)]
    pub nmf: bool,
    #[arg(long, default_value_t = DEFAULT_NMF_RANK)]
    pub nmf_rank: usize,
    #[arg(long, default_value_t = DEFAULT_NMF_ITERATIONS)]
    pub nmf_iters: usize,
    #[arg(long, value_enum, default_value_t = SeparateMethod::PuIter)]
    pub method: SeparateMethod,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Sequential)]
    pub schedule: ScheduleArg,
    #[arg(long, value_enum, default_value_t = InitArg::Pu)]
    pub init: InitArg,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iters: usize,
    /// Onset phases from the references instead of the mixture.
    #[arg(long)]
    pub oracle_onset_phase: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving one WAV per source.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub stft: StftArgs,
    #[command(flatten)]
    pub onset: OnsetArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub estimates: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    pub references: Vec<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OnsetsArgs {
    /// WAV files or PRSG grids, one output line each.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_HALFWIDTH)]
    pub median: usize,
    #[arg(long, default_value_t = 44_100)]
    pub sample_rate: u32,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Store magnitudes only.
    #[arg(long)]
    pub magnitude: bool,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub sources: usize,
    #[arg(long, default_value_t = 2.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Onset masks of the attacks are written for this analysis setting.
    #[command(flatten)]
    pub stft: StftArgs,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()
        .map_err(|e| CliError::input(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Reconstruct(args) => reconstruct(&args),
        Command::Separate(args) => separate(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Onsets(args) => onsets(&args),
        Command::Analyze(args) => analyze(&args),
        Command::Synth(args) => synth(&args),
    })
}

fn check_finite(what: &str, samples: &[f64]) -> CliResult<()> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numerical(format!("non-finite samples in {what}")));
    }
    Ok(())
}

fn file_stem(path: &Path, fallback: String) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map_or(fallback, str::to_owned)
}

/// Complex STFT on the padded support, from a WAV file or a PRSG grid.
struct Input {
    analysis: Option<Analysis>,
    spectrum: ComplexSpectrogram<f64>,
    reference: Option<Vec<f64>>,
}

fn load_input(args: &ReconstructArgs) -> CliResult<Input> {
    if let Some(path) = &args.input {
        let audio = read_wav(path)?;
        let config = args.stft.config(audio.sample_rate)?;
        let analysis = Analysis::new(config, &audio.samples, std::slice::from_ref(&audio.samples))?;
        let spectrum = analysis.mixture.clone();
        return Ok(Input {
            analysis: Some(analysis),
            spectrum,
            reference: Some(audio.samples),
        });
    }
    let path = args
        .spectrogram
        .as_ref()
        .ok_or_else(|| CliError::input("no input given"))?;
    let config = args.stft.config(args.sample_rate)?;
    let spectrum = match load_grid(path)? {
        Grid::Real(v) => {
            eprintln!(
                "warning: {} holds magnitudes only, onset frames get zero phase",
                path.display()
            );
            let v = MagnitudeSpectrogram::new(v, config)?;
            ComplexSpectrogram::from_polar(&v, &Array2::zeros(v.dim()))?
        }
        Grid::Complex(x) => ComplexSpectrogram::new(x, config)?,
    };
    Ok(Input {
        analysis: None,
        spectrum,
        reference: None,
    })
}

fn reconstruct(args: &ReconstructArgs) -> CliResult<()> {
    let input = load_input(args)?;
    let spectrum = &input.spectrum;
    let config = *spectrum.config();
    let magnitude = spectrum.magnitude();
    let frames = args
        .onset
        .frames(std::slice::from_ref(&magnitude))?
        .remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut mask = OnsetMask::new(frames).with_phases(spectrum.phase())?;
    perturb_onset_phases(&mut mask, None, args.onset.onset_noise, &mut rng)?;

    let start = Instant::now();
    let estimate = match args.method {
        ReconstructMethod::Pu => {
            PhaseUnwrapper::new(&config).reconstruct(&magnitude, &mask, None)?
        }
        ReconstructMethod::Gl => {
            let onset_phase = mask.phases().expect("mask carries phases");
            let mut phase = Array2::zeros(spectrum.dim());
            for (t, mut column) in phase.columns_mut().into_iter().enumerate() {
                if t == 0 || mask.contains(t) {
                    column.assign(&onset_phase.column(t));
                } else if args.corrupt {
                    column.iter_mut().for_each(|p| *p = random_phase(&mut rng));
                }
            }
            gl_reconstruct(&magnitude, &phase, args.iters)?.estimate
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let engine = Stft::new(config);
    let signal = match &input.analysis {
        Some(a) => a.resynthesize(&estimate)?,
        None => {
            let margin = config.edge_margin();
            let full = engine.synthesize(&estimate)?;
            let len = full.len().saturating_sub(2 * margin);
            phasesep::spectral::trim_edges(&full, margin, len)
        }
    };
    check_finite("reconstruction", &signal)?;
    write_wav(&args.output, &signal, config.sample_rate())?;

    let name = args
        .input
        .as_ref()
        .or(args.spectrogram.as_ref())
        .map(|p| file_stem(p, "signal".into()));
    let mut record = SourceRecord::named(name.unwrap_or_default());
    record.inconsistency = Some(engine.inconsistency(&estimate)?);
    if let Some(reference) = &input.reference {
        record.sdr = Some(phasesep::eval::sdr(&signal, reference)?);
    }
    if args.report.timing {
        record.wall_time = Some(elapsed);
    }
    args.report.emit(&[record])
}

fn separate(args: &SeparateArgs) -> CliResult<()> {
    let mixture = read_wav(&args.mixture)?;
    let (references, rate) = if args.references.is_empty() {
        (Vec::new(), mixture.sample_rate)
    } else {
        read_group(&args.references)?
    };
    if rate != mixture.sample_rate {
        return Err(CliError::input(
            "references and mixture differ in sample rate",
        ));
    }
    let mut signal = mixture.samples.clone();
    let len = references
        .first()
        .map_or(signal.len(), |r| r.len())
        .max(signal.len());
    signal.resize(len, 0.0);
    let references: Vec<Vec<f64>> = references
        .into_iter()
        .map(|mut r| {
            r.resize(len, 0.0);
            r
        })
        .collect();

    let config = args.stft.config(rate)?;
    let analysis = Analysis::new(config, &signal, &references)?;
    let magnitudes = source_magnitudes(args, &analysis)?;
    let k_count = magnitudes.len();
    if k_count < 1 {
        return Err(CliError::input("at least one source is required"));
    }
    if args.oracle_onset_phase && analysis.sources.len() != k_count {
        return Err(CliError::input(
            "oracle onset phases need one reference per source",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let frames = args.onset.frames(&magnitudes)?;
    let mut onsets = Vec::with_capacity(k_count);
    for (k, frames) in frames.into_iter().enumerate() {
        let mut mask = OnsetMask::new(frames);
        if args.oracle_onset_phase {
            mask = mask.with_phases(analysis.sources[k].phase())?;
        }
        if args.onset.onset_noise > 0.0 {
            perturb_onset_phases(
                &mut mask,
                Some(&analysis.mixture),
                args.onset.onset_noise,
                &mut rng,
            )?;
        }
        onsets.push(mask);
    }

    let start = Instant::now();
    let estimates = match args.method {
        SeparateMethod::Wiener => wiener(&analysis.mixture, &magnitudes)?,
        SeparateMethod::PuIter => {
            let problem = SeparationProblem::new(analysis.mixture.clone(), magnitudes, onsets)?
                .with_iterations(args.iters)
                .with_schedule(args.schedule.into())
                .with_initialization(args.init.into(), args.seed);
            pu_iter_separate(&problem)?.estimates
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let stems = estimates
        .iter()
        .map(|e| analysis.resynthesize(e))
        .collect::<phasesep::Result<Vec<_>>>()?;
    fs::create_dir_all(&args.out_dir)?;
    let names: Vec<String> = (0..k_count)
        .map(|k| match args.references.get(k) {
            Some(p) => file_stem(p, format!("source{k}")),
            None => format!("source{k}"),
        })
        .collect();
    for (stem, name) in stems.iter().zip(&names) {
        check_finite(name, stem)?;
        write_wav(&args.out_dir.join(format!("{name}.wav")), stem, rate)?;
    }

    let total_error = mixing_error(&analysis.mixture, &estimates)?;
    let scores = if references.len() == k_count {
        Some(bss_eval(&stems, &references)?)
    } else {
        None
    };
    let mut records = Vec::with_capacity(k_count);
    for (k, (estimate, name)) in estimates.iter().zip(names).enumerate() {
        let mut r = SourceRecord::named(name);
        if let Some(s) = &scores {
            r.sdr = Some(s.sdr[k]);
            r.sir = Some(s.sir[k]);
            r.sar = Some(s.sar[k]);
        }
        r.mixing_error = Some(total_error);
        r.inconsistency = Some(analysis.engine.inconsistency(estimate)?);
        if args.report.timing {
            r.wall_time = Some(elapsed);
        }
        records.push(r);
    }
    args.report.emit(&records)
}

fn source_magnitudes(
    args: &SeparateArgs,
    analysis: &Analysis,
) -> CliResult<Vec<MagnitudeSpectrogram<f64>>> {
    if !args.magnitudes.is_empty() {
        return args
            .magnitudes
            .iter()
            .map(|p| {
                let v = load_grid(p)?.into_real()?;
                let v = MagnitudeSpectrogram::new(v, *analysis.config())?;
                if v.dim() != analysis.mixture.dim() {
                    return Err(CliError::input(format!(
                        "{}: grid {:?} does not match the mixture grid {:?}",
                        p.display(),
                        v.dim(),
                        analysis.mixture.dim()
                    )));
                }
                Ok(v)
            })
            .collect();
    }
    if analysis.sources.is_empty() {
        return Err(CliError::input(
            "either --references or --magnitudes is required",
        ));
    }
    let oracle = analysis.source_magnitudes();
    if !args.nmf {
        return Ok(oracle);
    }
    use rayon::prelude::*;
    oracle
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            Ok(nmf_magnitude(
                v,
                args.nmf_rank,
                args.nmf_iters,
                args.seed.wrapping_add(k as u64),
            )?)
        })
        .collect()
}

fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    if args.estimates.len() != args.references.len() {
        return Err(CliError::input(format!(
            "{} estimates for {} references",
            args.estimates.len(),
            args.references.len()
        )));
    }
    let mut paths = args.estimates.clone();
    paths.extend(args.references.iter().cloned());
    let (signals, _) = read_group(&paths)?;
    let (estimates, references) = signals.split_at(args.estimates.len());
    let scores = bss_eval(estimates, references)?;
    let records: Vec<SourceRecord> = args
        .estimates
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut r = SourceRecord::named(file_stem(p, format!("source{k}")));
            r.sdr = Some(scores.sdr[k]);
            r.sir = Some(scores.sir[k]);
            r.sar = Some(scores.sar[k]);
            r
        })
        .collect();
    args.report.emit(&records)
}

fn is_prsg(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("prsg"))
}

fn onsets(args: &OnsetsArgs) -> CliResult<()> {
    let mut masks = Vec::with_capacity(args.input.len());
    for path in &args.input {
        let magnitude = if is_prsg(path) {
            let config = args.stft.config(args.sample_rate)?;
            match load_grid(path)? {
                Grid::Real(v) => MagnitudeSpectrogram::new(v, config)?,
                Grid::Complex(x) => ComplexSpectrogram::new(x, config)?.magnitude(),
            }
        } else {
            let audio = read_wav(path)?;
            let config = args.stft.config(audio.sample_rate)?;
            Analysis::new(config, &audio.samples, &[])?
                .mixture
                .magnitude()
        };
        masks.push(detect_onset_frames(&magnitude, args.threshold, args.median));
    }
    let text = format_onset_masks(&masks);
    match &args.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let audio = read_wav(&args.input)?;
    let config = args.stft.config(audio.sample_rate)?;
    let spectrum = Analysis::new(config, &audio.samples, &[])?.mixture;
    if args.magnitude {
        save_real(&args.output, spectrum.magnitude().data())?;
    } else {
        save_complex(&args.output, spectrum.data())?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    if args.sources < 1 {
        return Err(CliError::input("at least one source is required"));
    }
    let spec = MixtureSpec {
        sources: args.sources,
        seconds: args.seconds,
        sample_rate: args.sample_rate,
        ..MixtureSpec::default()
    };
    let m = note_mixture(&spec, args.seed);
    // keep headroom so the 16-bit mixture does not clip
    let peak = m.mixture().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let gain = if peak > 0.9 { 0.9 / peak } else { 1.0 };
    fs::create_dir_all(&args.out_dir)?;
    let scaled = |x: &[f64]| x.iter().map(|v| v * gain).collect::<Vec<_>>();
    write_wav(
        &args.out_dir.join("mixture.wav"),
        &scaled(&m.mixture()),
        args.sample_rate,
    )?;
    let config = args.stft.config(args.sample_rate)?;
    let analysis = Analysis::new(config, &m.mixture(), &[])?;
    let mut masks = Vec::with_capacity(args.sources);
    for (k, s) in m.sources.iter().enumerate() {
        write_wav(
            &args.out_dir.join(format!("source{k}.wav")),
            &scaled(&s.samples),
            args.sample_rate,
        )?;
        let mut frames = analysis.attack_frames(&s.attack_samples());
        frames.insert(0, 0);
        frames.dedup();
        masks.push(frames);
    }
    fs::write(args.out_dir.join("onsets.txt"), format_onset_masks(&masks))?;
    Ok(())
}
