//! Flat `section.key=value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Numeric settings that accept `auto` are resolved per trace at run time.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use bubblelink::channel::ChannelParams;
use bubblelink::dsp;
use bubblelink::dsp::{KalmanParams, MafParams, PeakDetectParams};
use bubblelink::metrics::DEFAULT_MATCH_TOLERANCE_S;
use bubblelink::modem::{BitSequence, TimingMode, TimingParams};
use bubblelink::rng::{SimRng, STREAM_BITS};
use bubblelink::SensorTrace;

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "BUBBLELINK_SEED";

const PAPER_LIKE: &str = include_str!("../presets/paper-like.conf");

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "paper-like" => Some(PAPER_LIKE),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &["paper-like"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitSource {
    Pattern(BitSequence),
    Random { length: usize, seed: u64 },
}

impl BitSource {
    pub fn payload(&self) -> BitSequence {
        match self {
            BitSource::Pattern(bits) => bits.clone(),
            BitSource::Random { length, seed } => {
                let mut rng = SimRng::new(*seed, STREAM_BITS);
                (0..*length).map(|_| rng.bit()).collect()
            }
        }
    }
}

/// `None` means "derive from the trace".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KalmanSetting {
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub x0: Option<f64>,
    pub p0: Option<f64>,
}

impl KalmanSetting {
    pub fn resolve(&self, trace: &SensorTrace) -> bubblelink::Result<KalmanParams> {
        let d = KalmanParams::default_for(trace);
        let r = self.r.unwrap_or(d.r());
        KalmanParams::new(
            self.q.unwrap_or(d.q()),
            r,
            self.x0.unwrap_or(d.x0()),
            self.p0.unwrap_or(r),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PeakSetting {
    pub threshold: Option<f64>,
    pub min_distance: Option<usize>,
}

impl PeakSetting {
    pub fn resolve(&self, trace: &SensorTrace) -> bubblelink::Result<PeakDetectParams> {
        PeakDetectParams::new(
            self.threshold
                .unwrap_or_else(|| dsp::default_threshold(trace)),
            self.min_distance
                .unwrap_or_else(|| dsp::default_min_distance(trace.sample_interval())),
        )
    }
}

pub fn resolve_maf(window: Option<usize>, trace: &SensorTrace) -> bubblelink::Result<MafParams> {
    match window {
        Some(w) => MafParams::new(w),
        None => Ok(MafParams::default_for(trace.sample_interval())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub timing: TimingParams,
    pub dose: f64,
    pub channel: ChannelParams,
    pub maf_window: Option<usize>,
    pub kalman: KalmanSetting,
    pub peak: PeakSetting,
    /// Detection-to-truth matching tolerance, seconds.
    pub tolerance: f64,
    /// Decoder half-window around each frame center, seconds.
    pub decode_window: f64,
    pub bits: BitSource,
    /// Leading `1`s sent before the payload; the first one anchors the decoder.
    pub preamble: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            timing: TimingParams::framed(0.3, 2.0).expect("valid default timing"),
            dose: 1.0,
            channel: ChannelParams::paper_like(),
            maf_window: None,
            kalman: KalmanSetting::default(),
            peak: PeakSetting::default(),
            tolerance: DEFAULT_MATCH_TOLERANCE_S,
            decode_window: DEFAULT_MATCH_TOLERANCE_S,
            bits: BitSource::Random {
                length: 64,
                seed: 1,
            },
            preamble: 1,
        }
    }
}

/// Keys in the order they are written back out.
pub const KEYS: &[&str] = &[
    "timing.t_on",
    "timing.t_off",
    "timing.mode",
    "timing.dose",
    "channel.flow_rate",
    "channel.tube_diameter",
    "channel.distance_to_sensor",
    "channel.loop_length",
    "channel.dispersion_coeff",
    "channel.initial_spread",
    "channel.pass_decay",
    "channel.echo_cutoff",
    "channel.noise_std",
    "channel.spike_rate",
    "channel.spike_amplitude_max",
    "channel.sample_interval",
    "channel.rng_seed",
    "channel.max_samples",
    "maf.window",
    "kalman.q",
    "kalman.r",
    "kalman.x0",
    "kalman.p0",
    "peak.threshold",
    "peak.min_distance",
    "eval.tolerance",
    "decode.window",
    "bits.pattern",
    "bits.length",
    "bits.seed",
    "bits.preamble",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::key(key, format!("cannot parse `{value}`")))
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// Timing is validated as a whole after all keys are applied.
#[derive(Debug, Clone, Copy)]
struct RawTiming {
    t_on: f64,
    t_off: f64,
    mode: TimingMode,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset `{name}` (available: {})",
                PRESET_NAMES.join(", ")
            ))
        })?;
        Self::parse_str(text, &format!("preset {name}"))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Parses a full config on top of the built-in defaults.
    pub fn parse_str(text: &str, source_name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text, source_name)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut assignments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CliError::ConfigLine {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key=value`, found `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            assignments.push((key.to_string(), value.trim().to_string()));
        }
        self.apply_all(assignments.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Applies `key=value` overrides such as the CLI's `--set` arguments.
    pub fn apply_overrides<'a>(&mut self, items: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let pairs = items
            .into_iter()
            .map(|item| {
                item.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| CliError::Usage(format!("override `{item}` is not `key=value`")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.apply_all(pairs)
    }

    fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let mut timing = RawTiming {
            t_on: self.timing.t_on(),
            t_off: self.timing.t_off(),
            mode: self.timing.mode(),
        };
        for (key, value) in pairs {
            self.set(&mut timing, key, value)?;
        }
        self.timing = TimingParams::new(timing.t_on, timing.t_off, timing.mode)
            .map_err(|e| CliError::key("timing", e.to_string()))?;
        self.validate()
    }

    fn set(&mut self, timing: &mut RawTiming, key: &str, value: &str) -> Result<()> {
        let ch = &mut self.channel;
        match key {
            "timing.t_on" => timing.t_on = parse(key, value)?,
            "timing.t_off" => timing.t_off = parse(key, value)?,
            "timing.mode" => {
                timing.mode = value
                    .parse()
                    .map_err(|e: bubblelink::Error| CliError::key(key, e.to_string()))?
            }
            "timing.dose" => self.dose = parse(key, value)?,
            "channel.flow_rate" => ch.flow_rate = parse(key, value)?,
            "channel.tube_diameter" => ch.tube_diameter = parse(key, value)?,
            "channel.distance_to_sensor" => ch.distance_to_sensor = parse(key, value)?,
            "channel.loop_length" => ch.loop_length = parse(key, value)?,
            "channel.dispersion_coeff" => ch.dispersion_coeff = parse(key, value)?,
            "channel.initial_spread" => ch.initial_spread = parse(key, value)?,
            "channel.pass_decay" => ch.pass_decay = parse(key, value)?,
            "channel.echo_cutoff" => ch.echo_cutoff = parse(key, value)?,
            "channel.noise_std" => ch.noise_std = parse(key, value)?,
            "channel.spike_rate" => ch.spike_rate = parse(key, value)?,
            "channel.spike_amplitude_max" => ch.spike_amplitude_max = parse(key, value)?,
            "channel.sample_interval" => ch.sample_interval = parse(key, value)?,
            "channel.rng_seed" => ch.rng_seed = parse(key, value)?,
            "channel.max_samples" => ch.max_samples = parse(key, value)?,
            "maf.window" => self.maf_window = parse_auto(key, value)?,
            "kalman.q" => self.kalman.q = parse_auto(key, value)?,
            "kalman.r" => self.kalman.r = parse_auto(key, value)?,
            "kalman.x0" => self.kalman.x0 = parse_auto(key, value)?,
            "kalman.p0" => self.kalman.p0 = parse_auto(key, value)?,
            "peak.threshold" => self.peak.threshold = parse_auto(key, value)?,
            "peak.min_distance" => self.peak.min_distance = parse_auto(key, value)?,
            "eval.tolerance" => self.tolerance = parse(key, value)?,
            "decode.window" => self.decode_window = parse(key, value)?,
            "bits.pattern" => {
                let bits = value
                    .parse()
                    .map_err(|e: bubblelink::Error| CliError::key(key, e.to_string()))?;
                self.bits = BitSource::Pattern(bits);
            }
            "bits.length" => {
                let length = parse(key, value)?;
                self.bits = match self.bits {
                    BitSource::Random { seed, .. } => BitSource::Random { length, seed },
                    BitSource::Pattern(_) => BitSource::Random { length, seed: 1 },
                };
            }
            "bits.seed" => {
                let seed = parse(key, value)?;
                self.bits = match self.bits {
                    BitSource::Random { length, .. } => BitSource::Random { length, seed },
                    BitSource::Pattern(_) => BitSource::Random { length: 64, seed },
                };
            }
            "bits.preamble" => self.preamble = parse(key, value)?,
            other => {
                return Err(CliError::key(other, "unknown key"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dose.is_finite() && self.dose > 0.0) {
            return Err(CliError::key(
                "timing.dose",
                format!("must be > 0, got {}", self.dose),
            ));
        }
        self.channel
            .validate()
            .map_err(|e| CliError::key("channel", e.to_string()))?;
        if self.maf_window == Some(0) {
            return Err(CliError::key("maf.window", "must be >= 1"));
        }
        if self.peak.min_distance == Some(0) {
            return Err(CliError::key("peak.min_distance", "must be >= 1"));
        }
        if let Some(t) = self.peak.threshold {
            if !t.is_finite() {
                return Err(CliError::key("peak.threshold", "must be finite"));
            }
        }
        let k = &self.kalman;
        if let Some(q) = k.q {
            if !(q.is_finite() && q >= 0.0) {
                return Err(CliError::key("kalman.q", "must be >= 0"));
            }
        }
        if let Some(r) = k.r {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::key("kalman.r", "must be > 0"));
            }
        }
        if let Some(p0) = k.p0 {
            if !(p0.is_finite() && p0 >= 0.0) {
                return Err(CliError::key("kalman.p0", "must be >= 0"));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CliError::key("eval.tolerance", "must be > 0"));
        }
        let half = self.timing.symbol_duration() / 2.0;
        if !(self.decode_window.is_finite()
            && self.decode_window >= 0.0
            && self.decode_window <= half)
        {
            return Err(CliError::key(
                "decode.window",
                format!("must lie in [0, {half}] (half a symbol)"),
            ));
        }
        Ok(())
    }

    /// Checks the extra requirements of a full encode-to-decode run.
    pub fn validate_for_decoding(&self) -> Result<()> {
        if self.preamble < 1 {
            return Err(CliError::key(
                "bits.preamble",
                "must be >= 1: the decoder anchors its frame clock on the first preamble peak",
            ));
        }
        if self.timing.mode() != TimingMode::FramedSymbol {
            return Err(CliError::key(
                "timing.mode",
                "only framed timing can be decoded",
            ));
        }
        Ok(())
    }

    /// Applies the seed environment override, if set.
    pub fn apply_seed_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.channel.rng_seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{v}` is not a u64 seed")))?;
        }
        Ok(())
    }

    /// The full transmitted sequence: preamble ones followed by the payload.
    pub fn transmitted_bits(&self) -> BitSequence {
        std::iter::repeat_n(true, self.preamble)
            .chain(self.bits.payload().iter())
            .collect()
    }

    /// Every setting in `key=value` form; parsing the output yields `self`.
    pub fn to_text(&self) -> String {
        fn auto<T: std::fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(|| "auto".to_string(), |v| v.to_string())
        }
        let ch = &self.channel;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("timing.t_on", self.timing.t_on().to_string());
        put("timing.t_off", self.timing.t_off().to_string());
        put("timing.mode", self.timing.mode().to_string());
        put("timing.dose", self.dose.to_string());
        put("channel.flow_rate", ch.flow_rate.to_string());
        put("channel.tube_diameter", ch.tube_diameter.to_string());
        put(
            "channel.distance_to_sensor",
            ch.distance_to_sensor.to_string(),
        );
        put("channel.loop_length", ch.loop_length.to_string());
        put("channel.dispersion_coeff", ch.dispersion_coeff.to_string());
        put("channel.initial_spread", ch.initial_spread.to_string());
        put("channel.pass_decay", ch.pass_decay.to_string());
        put("channel.echo_cutoff", ch.echo_cutoff.to_string());
        put("channel.noise_std", ch.noise_std.to_string());
        put("channel.spike_rate", ch.spike_rate.to_string());
        put(
            "channel.spike_amplitude_max",
            ch.spike_amplitude_max.to_string(),
        );
        put("channel.sample_interval", ch.sample_interval.to_string());
        put("channel.rng_seed", ch.rng_seed.to_string());
        put("channel.max_samples", ch.max_samples.to_string());
        put("maf.window", auto(self.maf_window));
        put("kalman.q", auto(self.kalman.q));
        put("kalman.r", auto(self.kalman.r));
        put("kalman.x0", auto(self.kalman.x0));
        put("kalman.p0", auto(self.kalman.p0));
        put("peak.threshold", auto(self.peak.threshold));
        put("peak.min_distance", auto(self.peak.min_distance));
        put("eval.tolerance", self.tolerance.to_string());
        put("decode.window", self.decode_window.to_string());
        match &self.bits {
            BitSource::Pattern(bits) => put("bits.pattern", bits.to_string()),
            BitSource::Random { length, seed } => {
                put("bits.length", length.to_string());
                put("bits.seed", seed.to_string());
            }
        }
        put("bits.preamble", self.preamble.to_string());
        s
    }
}
