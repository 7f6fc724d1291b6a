//! File-to-file pipeline steps. Each subcommand is one of these, and the
//! pipeline is these same calls chained through its output directory.

use std::path::Path;

use bubblelink::channel::{self, ChannelParams};
use bubblelink::dsp::{self, PeakSet};
use bubblelink::io;
use bubblelink::metrics::{self, MetricsReport};
use bubblelink::modem::{self, BitSequence, InjectionSchedule, TimingParams};
use bubblelink::SensorTrace;

use crate::config::{resolve_maf, KalmanSetting, PeakSetting};
use crate::error::Result;
use crate::report::{format_report, write_text};

pub fn encode(
    bits: &BitSequence,
    timing: &TimingParams,
    dose: f64,
    out: &Path,
) -> Result<InjectionSchedule> {
    let schedule = modem::encode(bits, timing, dose)?;
    io::write_schedule(&schedule, out)?;
    Ok(schedule)
}

pub fn simulate(schedule: &Path, params: &ChannelParams, out: &Path) -> Result<SensorTrace> {
    let schedule = io::read_schedule(schedule)?;
    let trace = channel::simulate(&schedule, params)?;
    io::write_trace(&trace, out)?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    MovingAverage { window: Option<usize> },
    Kalman(KalmanSetting),
}

pub fn filter(input: &Path, spec: &FilterSpec, out: &Path) -> Result<SensorTrace> {
    let trace = io::read_trace(input)?;
    let filtered = match spec {
        FilterSpec::MovingAverage { window } => {
            dsp::moving_average(&trace, &resolve_maf(*window, &trace)?)
        }
        FilterSpec::Kalman(setting) => dsp::kalman_filter(&trace, &setting.resolve(&trace)?),
    };
    io::write_trace(&filtered, out)?;
    Ok(filtered)
}

pub fn detect(input: &Path, setting: &PeakSetting, out: &Path) -> Result<PeakSet> {
    let trace = io::read_trace(input)?;
    let peaks = dsp::detect_peaks(&trace, &setting.resolve(&trace)?);
    io::write_peaks(&peaks, out)?;
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: BitSequence,
    pub delay: f64,
    pub warning: Option<String>,
}

/// Frame delay implied by the first detected peak being the first preamble bolus.
pub fn estimate_delay(peaks: &PeakSet, timing: &TimingParams) -> (f64, Option<String>) {
    match peaks.first() {
        None => (
            0.0,
            Some("no peaks detected: preamble missed, decoding with zero delay".into()),
        ),
        Some(p) => {
            let delay = p.time - timing.t_on() / 2.0;
            if delay < 0.0 {
                (
                    0.0,
                    Some(format!(
                        "first peak at {:.6} s precedes half an injection; delay clamped to 0",
                        p.time
                    )),
                )
            } else {
                (delay, None)
            }
        }
    }
}

pub fn decode(
    peaks_path: &Path,
    timing: &TimingParams,
    delay: Option<f64>,
    n_bits: usize,
    window: f64,
    out: &Path,
) -> Result<DecodeOutcome> {
    let peaks = io::read_peaks(peaks_path)?;
    let (delay, warning) = match delay {
        Some(d) => (d, None),
        None => estimate_delay(&peaks, timing),
    };
    let bits = modem::decode(&peaks, timing, delay, n_bits, window)?;
    io::write_bits(&bits, out)?;
    Ok(DecodeOutcome {
        bits,
        delay,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alignment {
    /// Shift ground truth by a fixed number of seconds.
    Offset(f64),
    /// Shift ground truth so its first injection midpoint meets the first detection.
    FirstPeak,
}

pub fn evaluate(
    peaks_path: &Path,
    truth_path: &Path,
    tolerance: f64,
    alignment: Alignment,
    bits_sent: Option<usize>,
    out: Option<&Path>,
) -> Result<(MetricsReport, f64, String)> {
    let peaks = io::read_peaks(peaks_path)?;
    let truth = io::read_schedule(truth_path)?;
    let offset = match alignment {
        Alignment::Offset(o) => o,
        Alignment::FirstPeak => match (peaks.first(), truth.events().first()) {
            (Some(p), Some(e)) => p.time - e.midpoint(),
            _ => 0.0,
        },
    };
    let matched = metrics::match_peaks(&peaks, &truth.shifted(offset), tolerance)?;
    let report = MetricsReport::from_match(&matched, truth.len(), bits_sent)?;
    let text = format_report(&report, offset);
    if let Some(out) = out {
        write_text(out, &text)?;
    }
    Ok((report, offset, text))
}
