use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use bubblelink::io;
use bubblelink::modem::{self, BitSequence, TimingMode, TimingParams};

use crate::config::{ExperimentConfig, KalmanSetting, PeakSetting};
use crate::error::{CliError, Result};
use crate::ops::{self, Alignment, FilterSpec};
use crate::pipeline;
use crate::plot;
use crate::report::write_text;

#[derive(Debug, Parser)]
#[command(
    name = "bubblelink",
    version,
    about = "Microbubble OOK link experiments over CSV files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a bit string into an injection schedule.
    Encode(EncodeArgs),
    /// Render a schedule into a sensor trace through the simulated loop.
    Simulate(SimulateArgs),
    /// Smooth a trace with the moving-average or Kalman filter.
    Filter(FilterArgs),
    /// Pick peaks from a trace.
    Detect(DetectArgs),
    /// Recover framed bits from detected peaks.
    Decode(DecodeArgs),
    /// Score detected peaks against the transmitted schedule.
    Evaluate(EvaluateArgs),
    /// Run encode, simulate and the raw/maf/kalman branches end to end.
    Pipeline(PipelineArgs),
    /// Draw a trace (and optionally peaks and injections) as SVG.
    Plot(PlotArgs),
    /// Print the rate figures of a timing configuration.
    Rates(TimingArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Framed,
    Variable,
}

impl From<ModeArg> for TimingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Framed => TimingMode::FramedSymbol,
            ModeArg::Variable => TimingMode::VariableLength,
        }
    }
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    /// Injection length for a 1, seconds.
    #[arg(long, default_value_t = 0.3)]
    pub t_on: f64,
    /// Idle length, seconds.
    #[arg(long, default_value_t = 2.0)]
    pub t_off: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Framed)]
    pub mode: ModeArg,
}

impl TimingArgs {
    fn params(&self) -> Result<TimingParams> {
        Ok(TimingParams::new(self.t_on, self.t_off, self.mode.into())?)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Bits as a string of 0/1 characters.
    #[arg(
        long,
        conflicts_with = "bits_file",
        required_unless_present = "bits_file"
    )]
    pub bits: Option<String>,
    #[arg(long)]
    pub bits_file: Option<PathBuf>,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[arg(long, default_value_t = 1.0)]
    pub dose: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment config file (`section.key=value` lines).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in config; `paper-like` when neither this nor --config is given.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override one config key, e.g. `--set channel.noise_std=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Channel RNG seed; beats both the config and BUBBLELINK_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_file(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::preset("paper-like")?,
        };
        cfg.apply_seed_env()?;
        cfg.apply_overrides(self.overrides.iter().map(String::as_str))?;
        if let Some(seed) = self.seed {
            cfg.channel.rng_seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub schedule: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FilterMethod {
    Maf,
    Kalman,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: FilterMethod,
    /// Moving-average window in samples; defaults to 0.3 s worth of samples.
    #[arg(long)]
    pub window: Option<usize>,
    /// Kalman process-noise variance; defaults to 1e-4 * max^2.
    #[arg(long)]
    pub q: Option<f64>,
    /// Kalman measurement-noise variance; defaults to 1e-2 * max^2.
    #[arg(long)]
    pub r: Option<f64>,
    /// Kalman initial estimate; defaults to the first sample.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Kalman initial variance; defaults to r.
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Defaults to half the 95th percentile of the trace.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Minimum separation in samples; defaults to 1 s worth of samples.
    #[arg(long)]
    pub min_distance: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub peaks: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub t_on: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_off: f64,
    #[arg(long)]
    pub n_bits: usize,
    /// Frame delay in seconds; estimated from the first peak when omitted.
    #[arg(long)]
    pub delay: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub peaks: PathBuf,
    /// Transmitted schedule.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub tolerance: f64,
    /// Shift the truth by this many seconds before matching.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "align")]
    pub offset: Option<f64>,
    /// Shift the truth so its first injection lines up with the first peak.
    #[arg(long)]
    pub align: bool,
    /// Total transmitted bits, for the bits-sent BER variant.
    #[arg(long)]
    pub bits_sent: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub peaks: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Filter(a) => cmd_filter(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Decode(a) => cmd_decode(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Pipeline(a) => cmd_pipeline(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Rates(a) => cmd_rates(&a),
    }
}

fn cmd_encode(a: &EncodeArgs) -> Result<()> {
    let bits: BitSequence = match (&a.bits, &a.bits_file) {
        (Some(s), _) => s.parse()?,
        (None, Some(p)) => io::read_bits(p)?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --bits/--bits-file is required".into(),
            ))
        }
    };
    let schedule = ops::encode(&bits, &a.timing.params()?, a.dose, &a.out)?;
    eprintln!(
        "encoded {} bits into {} injections over {:.3} s",
        bits.len(),
        schedule.len(),
        schedule.total_span()
    );
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let trace = ops::simulate(&a.schedule, &cfg.channel, &a.out)?;
    eprintln!("simulated {} samples", trace.len());
    Ok(())
}

fn cmd_filter(a: &FilterArgs) -> Result<()> {
    let spec = match a.method {
        FilterMethod::Maf => FilterSpec::MovingAverage { window: a.window },
        FilterMethod::Kalman => FilterSpec::Kalman(KalmanSetting {
            q: a.q,
            r: a.r,
            x0: a.x0,
            p0: a.p0,
        }),
    };
    ops::filter(&a.input, &spec, &a.out)?;
    Ok(())
}

fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let setting = PeakSetting {
        threshold: a.threshold,
        min_distance: a.min_distance,
    };
    let peaks = ops::detect(&a.input, &setting, &a.out)?;
    eprintln!("detected {} peaks", peaks.len());
    Ok(())
}

fn cmd_decode(a: &DecodeArgs) -> Result<()> {
    let timing = TimingParams::framed(a.t_on, a.t_off)?;
    let outcome = ops::decode(&a.peaks, &timing, a.delay, a.n_bits, a.window, &a.out)?;
    if let Some(w) = &outcome.warning {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "decoded {} bits with delay {:.6} s",
        outcome.bits.len(),
        outcome.delay
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let alignment = match (a.offset, a.align) {
        (Some(o), _) => Alignment::Offset(o),
        (None, true) => Alignment::FirstPeak,
        (None, false) => Alignment::Offset(0.0),
    };
    let (_, _, text) = ops::evaluate(
        &a.peaks,
        &a.truth,
        a.tolerance,
        alignment,
        a.bits_sent,
        a.out.as_deref(),
    )?;
    print!("{text}");
    Ok(())
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let outcome = pipeline::run(&cfg, &a.out_dir)?;
    println!(
        "{:<8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>14}",
        "branch", "precision", "recall", "f1", "ber", "bsr", "payload_errors"
    );
    for b in &outcome.branches {
        if let Some(w) = &b.warning {
            eprintln!("warning [{}]: {w}", b.branch.name());
        }
        let r = &b.report;
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}/{:<4}",
            b.branch.name(),
            r.precision,
            r.recall,
            r.f1,
            r.ber,
            r.bsr,
            b.payload_errors,
            outcome.payload.len()
        );
    }
    Ok(())
}

fn read_optional<T>(
    path: Option<&Path>,
    read: impl Fn(&Path) -> bubblelink::Result<T>,
) -> Result<Option<T>> {
    path.map(read).transpose().map_err(CliError::from)
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let trace = io::read_trace(&a.trace)?;
    let peaks = read_optional(a.peaks.as_deref(), |p| io::read_peaks(p))?;
    let truth = read_optional(a.truth.as_deref(), |p| io::read_schedule(p))?;
    let svg = plot::render_svg(&trace, peaks.as_ref(), truth.as_ref());
    write_text(&a.out, &svg)
}

fn cmd_rates(a: &TimingArgs) -> Result<()> {
    let t = a.params()?;
    println!("symbol_duration_s,{}", t.symbol_duration());
    println!("raw_bit_rate_bps,{:.6}", modem::raw_bit_rate(&t));
    println!("time_overhead,{:.6}", modem::time_overhead(&t));
    println!(
        "uniform_avg_bit_duration_s,{:.6}",
        modem::uniform_avg_bit_duration(&t)
    );
    println!(
        "effective_bit_rate_bps,{:.6}",
        modem::effective_bit_rate(&t)
    );
    println!("duty_efficiency,{:.6}", modem::duty_efficiency(&t));
    Ok(())
}
