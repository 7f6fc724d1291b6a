//! Detection scoring against the transmitted injections.
//!
//! BER here counts event errors, `(FP + FN) / peaks_total`, where `peaks_total` is
//! the number of transmitted `1`s. It is left unclamped, so a detector that fires
//! on noise can exceed 1.

use crate::dsp::PeakSet;
use crate::error::{Error, Result};
use crate::modem::InjectionSchedule;

pub const DEFAULT_MATCH_TOLERANCE_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// `(truth_time, detected_time)` for each true positive, in truth order.
    pub pairs: Vec<(f64, f64)>,
}

/// Greedy one-to-one matching of detections to injection midpoints.
///
/// Truth events are visited in time order; each takes the nearest still-unused
/// detection within `tolerance` (the earlier one on a tie).
pub fn match_peaks(
    detected: &PeakSet,
    truth: &InjectionSchedule,
    tolerance: f64,
) -> Result<MatchResult> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::Config(format!(
            "match tolerance must be > 0, got {tolerance}"
        )));
    }
    let times: Vec<f64> = detected.times().collect();
    let mut used = vec![false; times.len()];
    let mut pairs = Vec::new();

    for event in truth.events() {
        let t = event.midpoint();
        let lo = times.partition_point(|&d| d < t - tolerance);
        let best = (lo..times.len())
            .take_while(|&j| times[j] <= t + tolerance)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (times[a] - t)
                    .abs()
                    .total_cmp(&(times[b] - t).abs())
                    .then(a.cmp(&b))
            });
        if let Some(j) = best {
            used[j] = true;
            pairs.push((t, times[j]));
        }
    }

    let tp = pairs.len();
    Ok(MatchResult {
        tp,
        fp: times.len() - tp,
        fn_: truth.len() - tp,
        pairs,
    })
}

/// `(precision, recall, f1)`; each is 0 when its denominator is 0.
pub fn f1_score(m: &MatchResult) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

pub fn ber(m: &MatchResult, peaks_total: usize) -> Result<f64> {
    if peaks_total == 0 {
        return Err(Error::UndefinedMetric(
            "BER needs at least one transmitted high signal".into(),
        ));
    }
    Ok((m.fp + m.fn_) as f64 / peaks_total as f64)
}

pub fn bsr(ber_value: f64) -> f64 {
    1.0 - ber_value
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ber: f64,
    pub bsr: f64,
    /// Transmitted `1`s; the BER denominator.
    pub peaks_total: usize,
    /// All transmitted bits, when known.
    pub bits_sent: Option<usize>,
}

impl MetricsReport {
    pub fn from_match(
        m: &MatchResult,
        peaks_total: usize,
        bits_sent: Option<usize>,
    ) -> Result<Self> {
        let (precision, recall, f1) = f1_score(m);
        let ber = ber(m, peaks_total)?;
        Ok(Self {
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            precision,
            recall,
            f1,
            ber,
            bsr: bsr(ber),
            peaks_total,
            bits_sent,
        })
    }

    /// `(FP + FN)` over every transmitted bit rather than over the `1`s only.
    pub fn ber_over_bits_sent(&self) -> Option<f64> {
        self.bits_sent
            .filter(|&n| n > 0)
            .map(|n| (self.fp + self.fn_) as f64 / n as f64)
    }
}
