//! Smoothing filters and peak picking for sensor traces.

use crate::error::{Error, Result};
use crate::trace::SensorTrace;

/// Injection length the default moving-average window is matched to.
pub const DEFAULT_MAF_SPAN_S: f64 = 0.3;
/// Default minimum peak separation in seconds.
pub const DEFAULT_MIN_PEAK_SPACING_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MafParams {
    window: usize,
}

impl MafParams {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("moving-average window must be >= 1"));
        }
        Ok(Self { window })
    }

    /// Window covering one injection length at `sample_interval`.
    pub fn default_for(sample_interval: f64) -> Self {
        let window = (DEFAULT_MAF_SPAN_S / sample_interval).round().max(1.0) as usize;
        Self { window }
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// Causal trailing mean; the window shrinks over the first `window - 1` samples.
pub fn moving_average(trace: &SensorTrace, params: &MafParams) -> SensorTrace {
    let x = trace.samples();
    let w = params.window;
    let y = (0..x.len())
        .map(|n| {
            let start = (n + 1).saturating_sub(w);
            let win = &x[start..=n];
            win.iter().sum::<f64>() / win.len() as f64
        })
        .collect();
    trace.with_samples(y)
}

/// Scalar random-walk Kalman model: state `x` drifts with variance `q` per step,
/// measurements add variance `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    q: f64,
    r: f64,
    x0: f64,
    p0: f64,
}

impl KalmanParams {
    pub fn new(q: f64, r: f64, x0: f64, p0: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(Error::config(format!("kalman q must be >= 0, got {q}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::config(format!("kalman r must be > 0, got {r}")));
        }
        if !x0.is_finite() {
            return Err(Error::config(format!("kalman x0 must be finite, got {x0}")));
        }
        if !(p0.is_finite() && p0 >= 0.0) {
            return Err(Error::config(format!("kalman p0 must be >= 0, got {p0}")));
        }
        Ok(Self { q, r, x0, p0 })
    }

    /// Scale-relative tuning: `q = 1e-4 * max^2`, `r = 1e-2 * max^2`, `x0` the
    /// first sample and `p0 = r`. A silent trace falls back to unit scale.
    pub fn default_for(trace: &SensorTrace) -> Self {
        let peak = trace.max().unwrap_or(0.0);
        let scale = if peak > 0.0 { peak * peak } else { 1.0 };
        let r = 1e-2 * scale;
        Self {
            q: 1e-4 * scale,
            r,
            x0: trace.samples().first().copied().unwrap_or(0.0),
            p0: r,
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
}

/// Running state of the scalar filter, exposed so callers can inspect the
/// estimate variance alongside the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub estimate: f64,
    pub variance: f64,
}

impl KalmanState {
    pub fn step(&mut self, z: f64, q: f64, r: f64) -> f64 {
        let p_prior = self.variance + q;
        let gain = p_prior / (p_prior + r);
        self.estimate += gain * (z - self.estimate);
        self.variance = (1.0 - gain) * p_prior;
        self.estimate
    }
}

pub fn kalman_filter(trace: &SensorTrace, params: &KalmanParams) -> SensorTrace {
    let mut state = KalmanState {
        estimate: params.x0,
        variance: params.p0,
    };
    let y = trace
        .samples()
        .iter()
        .map(|&z| state.step(z, params.q, params.r))
        .collect();
    trace.with_samples(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDetectParams {
    threshold: f64,
    min_distance: usize,
}

impl PeakDetectParams {
    pub fn new(threshold: f64, min_distance: usize) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::config(format!(
                "peak threshold must be finite, got {threshold}"
            )));
        }
        if min_distance == 0 {
            return Err(Error::config("peak min_distance must be >= 1"));
        }
        Ok(Self {
            threshold,
            min_distance,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn min_distance(&self) -> usize {
        self.min_distance
    }
}

/// Heuristic detection threshold: half the 95th percentile of the trace.
pub fn default_threshold(trace: &SensorTrace) -> f64 {
    0.5 * percentile(trace.samples(), 95.0)
}

/// Minimum peak separation of one second, in samples.
pub fn default_min_distance(sample_interval: f64) -> usize {
    (DEFAULT_MIN_PEAK_SPACING_S / sample_interval)
        .round()
        .max(1.0) as usize
}

/// Linear-interpolated percentile (`p` in `[0, 100]`) of `values`; 0 when empty.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p.clamp(0.0, 100.0) / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub amplitude: f64,
}

/// Detected peaks in strictly ascending time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeakSet {
    peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn new(peaks: Vec<Peak>) -> Result<Self> {
        if let Some(i) = peaks
            .iter()
            .position(|p| !(p.time.is_finite() && p.amplitude.is_finite()))
        {
            return Err(Error::config(format!("peak {i} has a non-finite value")));
        }
        if let Some(i) = peaks.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(Error::config(format!(
                "peak {}: times must be strictly ascending",
                i + 1
            )));
        }
        Ok(Self { peaks })
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.peaks.iter().map(|p| p.time)
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn first(&self) -> Option<&Peak> {
        self.peaks.first()
    }
}

/// Indices of local maxima at or above `threshold`.
///
/// A maximal run of equal samples counts once, at its first index, when every
/// existing neighbour of the run is strictly lower.
pub fn peak_candidates(x: &[f64], threshold: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < x.len() {
        let v = x[i];
        let mut j = i;
        while j + 1 < x.len() && x[j + 1] == v {
            j += 1;
        }
        let left_lower = i == 0 || x[i - 1] < v;
        let right_lower = j + 1 == x.len() || x[j + 1] < v;
        if v >= threshold && left_lower && right_lower {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Sample indices of accepted peaks, ascending.
///
/// Candidates are taken by descending amplitude (earlier index first on ties);
/// each is dropped if it lies closer than `min_distance` samples to one already
/// accepted.
pub fn detect_peak_indices(x: &[f64], params: &PeakDetectParams) -> Vec<usize> {
    let mut order = peak_candidates(x, params.threshold);
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut accepted: Vec<usize> = Vec::new();
    for c in order {
        // `accepted` stays sorted, so only the neighbours around the insertion
        // point can be within range.
        let pos = accepted.partition_point(|&a| a < c);
        let near_left = pos > 0 && c - accepted[pos - 1] < params.min_distance;
        let near_right = pos < accepted.len() && accepted[pos] - c < params.min_distance;
        if !near_left && !near_right {
            accepted.insert(pos, c);
        }
    }
    accepted
}

pub fn detect_peaks(trace: &SensorTrace, params: &PeakDetectParams) -> PeakSet {
    let x = trace.samples();
    let peaks = detect_peak_indices(x, params)
        .into_iter()
        .map(|n| Peak {
            time: trace.bin_center(n),
            amplitude: x[n],
        })
        .collect();
    PeakSet { peaks }
}
