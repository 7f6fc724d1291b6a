//! Time-based on-off keying.
//!
//! A `1` is an injection of length `t_on`, a `0` an idle period of length `t_off`.
//! Two readings of that rule are supported:
//!
//! * [`TimingMode::FramedSymbol`]: every bit owns a fixed frame of `t_on + t_off`
//!   seconds; a `1` injects at the frame start. This is the only decodable mode.
//! * [`TimingMode::VariableLength`]: a `1` lasts `t_on`, a `0` lasts `t_off`, so the
//!   average bit duration under uniform bits is `(t_on + t_off) / 2`.

use std::fmt;
use std::str::FromStr;

use crate::dsp::PeakSet;
use crate::error::{Error, Result};

/// Slack used when checking that consecutive injections do not overlap.
/// Absorbs float rounding from cursor accumulation and 6-decimal file output.
pub const OVERLAP_SLACK_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingMode {
    #[default]
    FramedSymbol,
    VariableLength,
}

impl FromStr for TimingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "framed" | "framed-symbol" | "FramedSymbol" => Ok(Self::FramedSymbol),
            "variable" | "variable-length" | "VariableLength" => Ok(Self::VariableLength),
            other => Err(Error::config(format!(
                "unknown timing mode `{other}` (expected `framed` or `variable`)"
            ))),
        }
    }
}

impl fmt::Display for TimingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FramedSymbol => "framed",
            Self::VariableLength => "variable",
        })
    }
}

/// The symbol clock. `t_off >= t_on > 0` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    t_on: f64,
    t_off: f64,
    mode: TimingMode,
}

impl TimingParams {
    pub fn new(t_on: f64, t_off: f64, mode: TimingMode) -> Result<Self> {
        if !(t_on.is_finite() && t_on > 0.0) {
            return Err(Error::config(format!("t_on must be > 0, got {t_on}")));
        }
        if !(t_off.is_finite() && t_off > 0.0) {
            return Err(Error::config(format!("t_off must be > 0, got {t_off}")));
        }
        if t_off < t_on {
            return Err(Error::config(format!(
                "t_off ({t_off}) must not be shorter than t_on ({t_on})"
            )));
        }
        Ok(Self { t_on, t_off, mode })
    }

    pub fn framed(t_on: f64, t_off: f64) -> Result<Self> {
        Self::new(t_on, t_off, TimingMode::FramedSymbol)
    }

    pub fn t_on(&self) -> f64 {
        self.t_on
    }

    pub fn t_off(&self) -> f64 {
        self.t_off
    }

    pub fn mode(&self) -> TimingMode {
        self.mode
    }

    pub fn symbol_duration(&self) -> f64 {
        self.t_on + self.t_off
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSequence(Vec<bool>);

impl BitSequence {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Number of positions where `self` and `other` differ, counting any length
    /// mismatch as errors.
    pub fn hamming_distance(&self, other: &BitSequence) -> usize {
        let common = self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count();
        common + self.0.len().abs_diff(other.0.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }
}

impl From<Vec<bool>> for BitSequence {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl FromIterator<bool> for BitSequence {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl FromStr for BitSequence {
    type Err = Error;

    /// Parses a string of `0`/`1` characters with no separators.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::config(format!(
                    "invalid bit `{other}` at position {i}: only `0` and `1` are allowed"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    pub start: f64,
    pub duration: f64,
    /// Bolus strength in sensor amplitude units.
    pub dose: f64,
}

impl Injection {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn midpoint(&self) -> f64 {
        self.start + self.duration / 2.0
    }
}

/// Sorted, non-overlapping injections plus the time the transmission occupies.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSchedule {
    events: Vec<Injection>,
    total_span: f64,
}

/// Which schedule rule an event list breaks, reported with the offending index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleViolation {
    NonFinite,
    NonPositiveDuration,
    NonPositiveDose,
    NotAscending,
    Overlap,
    SpanTooShort,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonFinite => "values must be finite",
            Self::NonPositiveDuration => "duration must be > 0",
            Self::NonPositiveDose => "dose must be > 0",
            Self::NotAscending => "starts must be strictly ascending",
            Self::Overlap => "events must not overlap (start + duration <= next start)",
            Self::SpanTooShort => "total span must cover the last event",
        })
    }
}

impl InjectionSchedule {
    pub fn new(events: Vec<Injection>, total_span: f64) -> Result<Self> {
        if let Some((i, v)) = Self::find_violation(&events, total_span) {
            return Err(Error::config(format!("injection {i}: {v}")));
        }
        Ok(Self { events, total_span })
    }

    /// Schedule whose span ends with the last injection.
    pub fn from_events(events: Vec<Injection>) -> Result<Self> {
        let span = events.last().map_or(0.0, Injection::end);
        Self::new(events, span)
    }

    pub fn empty() -> Self {
        Self {
            events: Vec::new(),
            total_span: 0.0,
        }
    }

    /// First rule broken by `events`, with the index of the offending event.
    pub fn find_violation(
        events: &[Injection],
        total_span: f64,
    ) -> Option<(usize, ScheduleViolation)> {
        for (i, e) in events.iter().enumerate() {
            if !(e.start.is_finite() && e.duration.is_finite() && e.dose.is_finite()) {
                return Some((i, ScheduleViolation::NonFinite));
            }
            if e.duration <= 0.0 {
                return Some((i, ScheduleViolation::NonPositiveDuration));
            }
            if e.dose <= 0.0 {
                return Some((i, ScheduleViolation::NonPositiveDose));
            }
            if i > 0 {
                let prev = &events[i - 1];
                if e.start <= prev.start {
                    return Some((i, ScheduleViolation::NotAscending));
                }
                if prev.end() > e.start + OVERLAP_SLACK_S {
                    return Some((i, ScheduleViolation::Overlap));
                }
            }
        }
        if !total_span.is_finite() {
            return Some((events.len(), ScheduleViolation::NonFinite));
        }
        if let Some(last) = events.last() {
            if last.end() > total_span + OVERLAP_SLACK_S {
                return Some((events.len() - 1, ScheduleViolation::SpanTooShort));
            }
        }
        None
    }

    pub fn events(&self) -> &[Injection] {
        &self.events
    }

    pub fn total_span(&self) -> f64 {
        self.total_span
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The same schedule delayed by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| Injection {
                    start: e.start + offset,
                    ..*e
                })
                .collect(),
            total_span: self.total_span + offset,
        }
    }
}

pub fn encode(bits: &BitSequence, timing: &TimingParams, dose: f64) -> Result<InjectionSchedule> {
    if !(dose.is_finite() && dose > 0.0) {
        return Err(Error::config(format!("dose must be > 0, got {dose}")));
    }
    let (t_on, t_off) = (timing.t_on, timing.t_off);
    let mut events = Vec::with_capacity(bits.count_ones());
    let total_span = match timing.mode {
        TimingMode::FramedSymbol => {
            let t_sym = timing.symbol_duration();
            for (i, bit) in bits.iter().enumerate() {
                if bit {
                    events.push(Injection {
                        start: i as f64 * t_sym,
                        duration: t_on,
                        dose,
                    });
                }
            }
            bits.len() as f64 * t_sym
        }
        TimingMode::VariableLength => {
            let mut cursor = 0.0;
            for bit in bits.iter() {
                if bit {
                    events.push(Injection {
                        start: cursor,
                        duration: t_on,
                        dose,
                    });
                    cursor += t_on;
                } else {
                    cursor += t_off;
                }
            }
            cursor
        }
    };
    InjectionSchedule::new(events, total_span)
}

/// Recovers `n_bits` framed bits from detected peak times.
///
/// Bit `i` is `1` iff some peak lies within `window` seconds of
/// `delay + i*T_sym + t_on/2`, the injection midpoint of frame `i`.
pub fn decode(
    peaks: &PeakSet,
    timing: &TimingParams,
    delay: f64,
    n_bits: usize,
    window: f64,
) -> Result<BitSequence> {
    if timing.mode != TimingMode::FramedSymbol {
        return Err(Error::UnsupportedMode(
            "only framed-symbol timing can be decoded".into(),
        ));
    }
    let t_sym = timing.symbol_duration();
    if !(window.is_finite() && window >= 0.0 && window <= t_sym / 2.0) {
        return Err(Error::config(format!(
            "decode window must lie in [0, T_sym/2] = [0, {}], got {window}",
            t_sym / 2.0
        )));
    }
    if !(delay.is_finite() && delay >= 0.0) {
        return Err(Error::config(format!("delay must be >= 0, got {delay}")));
    }
    let times: Vec<f64> = peaks.times().collect();
    Ok((0..n_bits)
        .map(|i| {
            let center = delay + i as f64 * t_sym + timing.t_on / 2.0;
            // Peaks are ascending: find the first one not before the window.
            let lo = times.partition_point(|&t| t < center - window);
            times.get(lo).is_some_and(|&t| (t - center).abs() <= window)
        })
        .collect())
}

pub fn raw_bit_rate(timing: &TimingParams) -> f64 {
    1.0 / timing.symbol_duration()
}

/// Fraction of the symbol spent idle.
pub fn time_overhead(timing: &TimingParams) -> f64 {
    timing.t_off / timing.symbol_duration()
}

/// Mean bit duration when `0` and `1` are equally likely and bits last `t_off`/`t_on`.
pub fn uniform_avg_bit_duration(timing: &TimingParams) -> f64 {
    timing.symbol_duration() / 2.0
}

pub fn effective_bit_rate(timing: &TimingParams) -> f64 {
    1.0 / uniform_avg_bit_duration(timing)
}

/// Share of the average bit duration spent injecting.
pub fn duty_efficiency(timing: &TimingParams) -> f64 {
    timing.t_on / uniform_avg_bit_duration(timing)
}

/// Ceiling imposed by a sensor that needs `min_intervals` bins of
/// `sample_interval` seconds to register one symbol.
pub fn max_channel_bit_rate(sample_interval: f64, min_intervals: u32) -> Result<f64> {
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(Error::config(format!(
            "sample_interval must be > 0, got {sample_interval}"
        )));
    }
    if min_intervals == 0 {
        return Err(Error::config("min_intervals must be >= 1"));
    }
    Ok(1.0 / (f64::from(min_intervals) * sample_interval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Peak;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitSequence {
        s.parse().unwrap()
    }

    fn paper_timing() -> TimingParams {
        TimingParams::framed(0.3, 2.0).unwrap()
    }

    fn peaks_at(times: &[f64]) -> PeakSet {
        PeakSet::new(
            times
                .iter()
                .map(|&time| Peak {
                    time,
                    amplitude: 1.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn timing_rejects_bad_values() {
        assert!(TimingParams::framed(0.0, 2.0).is_err());
        assert!(TimingParams::framed(0.3, -1.0).is_err());
        assert!(TimingParams::framed(2.0, 0.3).is_err());
        assert!(TimingParams::framed(f64::NAN, 1.0).is_err());
        assert!(TimingParams::framed(1.0, 1.0).is_ok());
    }

    #[test]
    fn encode_framed() {
        let s = encode(&bits("101"), &paper_timing(), 1.0).unwrap();
        let starts: Vec<f64> = s.events().iter().map(|e| e.start).collect();
        assert_eq!(starts.len(), 2);
        assert_eq!(starts[0], 0.0);
        assert!((starts[1] - 4.6).abs() < 1e-12);
        assert!(s
            .events()
            .iter()
            .all(|e| e.duration == 0.3 && e.dose == 1.0));
        assert!((s.total_span() - 6.9).abs() < 1e-12);
    }

    #[test]
    fn encode_variable_length_walks_cursor() {
        let t = TimingParams::new(0.3, 2.0, TimingMode::VariableLength).unwrap();
        let s = encode(&bits("101"), &t, 1.0).unwrap();
        let starts: Vec<f64> = s.events().iter().map(|e| e.start).collect();
        assert_eq!(starts, vec![0.0, 2.3]);
        assert!((s.total_span() - 2.6).abs() < 1e-12);
    }

    #[test]
    fn encode_empty() {
        for mode in [TimingMode::FramedSymbol, TimingMode::VariableLength] {
            let t = TimingParams::new(0.3, 2.0, mode).unwrap();
            let s = encode(&BitSequence::default(), &t, 1.0).unwrap();
            assert!(s.is_empty());
            assert_eq!(s.total_span(), 0.0);
        }
    }

    #[test]
    fn encode_rejects_bad_dose() {
        assert!(encode(&bits("1"), &paper_timing(), 0.0).is_err());
        assert!(encode(&bits("1"), &paper_timing(), -2.0).is_err());
    }

    #[test]
    fn decode_frame_centers() {
        let p = peaks_at(&[0.15, 4.75]);
        let out = decode(&p, &paper_timing(), 0.0, 3, 1.0).unwrap();
        assert_eq!(out, bits("101"));
    }

    #[test]
    fn decode_silence_is_zeros() {
        let out = decode(&PeakSet::default(), &paper_timing(), 0.0, 4, 1.0).unwrap();
        assert_eq!(out, bits("0000"));
    }

    #[test]
    fn decode_multiple_peaks_in_frame() {
        let p = peaks_at(&[0.15, 0.20]);
        assert_eq!(decode(&p, &paper_timing(), 0.0, 1, 1.0).unwrap(), bits("1"));
    }

    #[test]
    fn decode_honours_delay() {
        let p = peaks_at(&[1.87, 6.47]);
        let out = decode(&p, &paper_timing(), 1.72, 3, 1.0).unwrap();
        assert_eq!(out, bits("101"));
    }

    #[test]
    fn decode_rejects_variable_length() {
        let t = TimingParams::new(0.3, 2.0, TimingMode::VariableLength).unwrap();
        let err = decode(&PeakSet::default(), &t, 0.0, 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedMode(_)));
    }

    #[test]
    fn decode_rejects_wide_window_and_negative_delay() {
        assert!(decode(&PeakSet::default(), &paper_timing(), 0.0, 1, 1.2).is_err());
        assert!(decode(&PeakSet::default(), &paper_timing(), -0.1, 1, 1.0).is_err());
    }

    #[test]
    fn rate_figures() {
        let t = paper_timing();
        assert!((raw_bit_rate(&t) - 0.434783).abs() < 1e-6);
        assert!((raw_bit_rate(&t) - 1.0 / 2.3).abs() < 1e-12);
        assert!((time_overhead(&t) - 0.869565).abs() < 1e-6);
        assert_eq!(uniform_avg_bit_duration(&t), 1.15);
        assert!((effective_bit_rate(&t) - 0.869565).abs() < 1e-6);
        assert!((effective_bit_rate(&t) - 2.0 / 2.3).abs() < 1e-12);
        assert!((duty_efficiency(&t) - 0.260870).abs() < 1e-6);

        let half = TimingParams::framed(0.5, 0.5).unwrap();
        assert_eq!(raw_bit_rate(&half), 1.0);
        let unit = TimingParams::framed(1.0, 1.0).unwrap();
        assert_eq!(time_overhead(&unit), 0.5);
        assert_eq!(uniform_avg_bit_duration(&unit), 1.0);
        assert_eq!(effective_bit_rate(&unit), 1.0);
        assert_eq!(duty_efficiency(&unit), 1.0);

        let t = TimingParams::framed(0.1, 0.9).unwrap();
        assert!((time_overhead(&t) - 0.9).abs() < 1e-15);
        let t = TimingParams::framed(0.2, 1.8).unwrap();
        assert!((uniform_avg_bit_duration(&t) - 1.0).abs() < 1e-15);
        let t = TimingParams::framed(0.5, 1.5).unwrap();
        assert_eq!(duty_efficiency(&t), 0.5);
    }

    #[test]
    fn channel_ceiling() {
        assert!((max_channel_bit_rate(0.040, 3).unwrap() - 8.3333).abs() < 1e-3);
        assert_eq!(max_channel_bit_rate(1.0, 1).unwrap(), 1.0);
        assert!((max_channel_bit_rate(0.040, 5).unwrap() - 5.0).abs() < 1e-12);
        assert!(max_channel_bit_rate(0.0, 3).is_err());
        assert!(max_channel_bit_rate(0.04, 0).is_err());
    }

    #[test]
    fn bit_sequence_parsing() {
        assert_eq!(bits("101").bits(), &[true, false, true]);
        assert!("10a".parse::<BitSequence>().is_err());
        assert_eq!(bits("0110").to_string(), "0110");
        assert!(bits("").is_empty());
    }

    #[test]
    fn schedule_validation() {
        let ev = |start, duration, dose| Injection {
            start,
            duration,
            dose,
        };
        assert!(
            InjectionSchedule::from_events(vec![ev(0.0, 0.3, 1.0), ev(0.2, 0.3, 1.0)]).is_err()
        );
        assert!(
            InjectionSchedule::from_events(vec![ev(1.0, 0.3, 1.0), ev(0.0, 0.3, 1.0)]).is_err()
        );
        assert!(InjectionSchedule::from_events(vec![ev(0.0, 0.3, 0.0)]).is_err());
        assert!(InjectionSchedule::from_events(vec![ev(0.0, 0.3, 1.0), ev(0.3, 0.3, 1.0)]).is_ok());
    }

    fn timing_strategy() -> impl Strategy<Value = TimingParams> {
        (0.01f64..2.0, 0.0f64..3.0, any::<bool>()).prop_map(|(on, extra, framed)| {
            let mode = if framed {
                TimingMode::FramedSymbol
            } else {
                TimingMode::VariableLength
            };
            TimingParams::new(on, on + extra, mode).unwrap()
        })
    }

    proptest! {
        #[test]
        fn framed_round_trip(raw in prop::collection::vec(any::<bool>(), 0..300),
                             on in 0.01f64..1.0, extra in 0.0f64..3.0) {
            let timing = TimingParams::framed(on, on + extra).unwrap();
            let b = BitSequence::new(raw);
            let sched = encode(&b, &timing, 1.0).unwrap();
            let peaks = peaks_at(&sched.events().iter().map(Injection::midpoint).collect::<Vec<_>>());
            let window = timing.symbol_duration() / 2.0;
            let back = decode(&peaks, &timing, 0.0, b.len(), window).unwrap();
            prop_assert_eq!(back, b);
        }

        #[test]
        fn encode_output_is_valid(raw in prop::collection::vec(any::<bool>(), 0..10_000),
                                  timing in timing_strategy()) {
            let sched = encode(&BitSequence::new(raw), &timing, 0.7).unwrap();
            prop_assert!(InjectionSchedule::find_violation(sched.events(), sched.total_span()).is_none());
            for w in sched.events().windows(2) {
                prop_assert!(w[0].start < w[1].start);
                prop_assert!(w[0].end() <= w[1].start);
            }
        }

        #[test]
        fn rate_identities(timing in timing_strategy()) {
            let tsym = timing.t_on() + timing.t_off();
            prop_assert!((raw_bit_rate(&timing) * tsym - 1.0).abs() < 1e-12);
            prop_assert!((effective_bit_rate(&timing) * uniform_avg_bit_duration(&timing) - 1.0).abs() < 1e-12);
            prop_assert!((time_overhead(&timing) + timing.t_on() / tsym - 1.0).abs() < 1e-12);
        }

        #[test]
        fn symmetric_timing(on in 0.01f64..5.0) {
            let t = TimingParams::framed(on, on).unwrap();
            prop_assert!((duty_efficiency(&t) - 1.0).abs() < 1e-12);
            prop_assert!((time_overhead(&t) - 0.5).abs() < 1e-12);
        }
    }
}
