//! Seeded simulator for the closed flow loop between injector and sensor.
//!
//! Each injection travels with the mean flow to the sensor, spreading in time as
//! it goes, and comes back once per loop with reduced strength until it drops
//! below a relative cutoff. The sensor reports one amplitude per bin, taken at the
//! bin center, plus Gaussian background noise and sparse one-bin spikes.

use crate::error::{Error, Result};
use crate::modem::{Injection, InjectionSchedule};
use crate::rng::{SimRng, STREAM_NOISE, STREAM_SPIKES};
use crate::trace::SensorTrace;

pub const DEFAULT_MAX_SAMPLES: usize = 1_000_000;

/// Half-width, in standard deviations, of the window each Gaussian pass is
/// evaluated over. The neglected tail is below `exp(-50)` of the pass amplitude.
const PULSE_SUPPORT_SIGMAS: f64 = 10.0;

/// Extra time after the last retained echo center that the trace keeps.
const TAIL_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Volumetric flow in L/min.
    pub flow_rate: f64,
    /// Inner tube diameter in meters.
    pub tube_diameter: f64,
    /// Tube length from injection point to sensor, meters.
    pub distance_to_sensor: f64,
    /// Length of one full circulation, meters.
    pub loop_length: f64,
    /// Growth of the temporal spread: seconds of std per square-root second of travel.
    pub dispersion_coeff: f64,
    /// Temporal std of a bolus at injection, seconds.
    pub initial_spread: f64,
    /// Amplitude kept per loop pass, in `[0, 1)`.
    pub pass_decay: f64,
    /// Passes weaker than `echo_cutoff * dose` are dropped.
    pub echo_cutoff: f64,
    pub noise_std: f64,
    /// Spurious one-bin transients per second.
    pub spike_rate: f64,
    pub spike_amplitude_max: f64,
    pub sample_interval: f64,
    pub rng_seed: u64,
    pub max_samples: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::paper_like()
    }
}

impl ChannelParams {
    /// Loop geometry and sensor clock of the bench setup with an assumed loop layout.
    ///
    /// Flow, diameter and bin width match the bench; the distances, spreading,
    /// decay and noise levels are calibration choices.
    pub fn paper_like() -> Self {
        Self {
            flow_rate: 1.24,
            tube_diameter: 0.009525,
            distance_to_sensor: 0.5,
            loop_length: 2.0,
            dispersion_coeff: 0.05,
            initial_spread: 0.05,
            pass_decay: 0.35,
            echo_cutoff: 0.05,
            noise_std: 0.1,
            spike_rate: 0.5,
            spike_amplitude_max: 1.5,
            sample_interval: 0.040,
            rng_seed: 42,
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }

    /// The same channel without background noise or spikes.
    pub fn noiseless(mut self) -> Self {
        self.noise_std = 0.0;
        self.spike_rate = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg()))
            }
        }
        let finite = [
            ("flow_rate", self.flow_rate),
            ("tube_diameter", self.tube_diameter),
            ("distance_to_sensor", self.distance_to_sensor),
            ("loop_length", self.loop_length),
            ("dispersion_coeff", self.dispersion_coeff),
            ("initial_spread", self.initial_spread),
            ("pass_decay", self.pass_decay),
            ("echo_cutoff", self.echo_cutoff),
            ("noise_std", self.noise_std),
            ("spike_rate", self.spike_rate),
            ("spike_amplitude_max", self.spike_amplitude_max),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in finite {
            check(v.is_finite(), || {
                format!("channel.{name} must be finite, got {v}")
            })?;
        }
        check(self.flow_rate > 0.0, || {
            format!("channel.flow_rate must be > 0, got {}", self.flow_rate)
        })?;
        check(self.tube_diameter > 0.0, || {
            format!(
                "channel.tube_diameter must be > 0, got {}",
                self.tube_diameter
            )
        })?;
        check(
            self.distance_to_sensor > 0.0 && self.distance_to_sensor <= self.loop_length,
            || {
                format!(
                    "channel.distance_to_sensor must satisfy 0 < distance <= loop_length ({}), got {}",
                    self.loop_length, self.distance_to_sensor
                )
            },
        )?;
        check((0.0..1.0).contains(&self.pass_decay), || {
            format!(
                "channel.pass_decay must lie in [0, 1), got {}",
                self.pass_decay
            )
        })?;
        check(self.echo_cutoff > 0.0, || {
            format!("channel.echo_cutoff must be > 0, got {}", self.echo_cutoff)
        })?;
        check(
            self.dispersion_coeff >= 0.0 && self.initial_spread >= 0.0,
            || "channel.dispersion_coeff and channel.initial_spread must be >= 0".into(),
        )?;
        check(
            self.dispersion_coeff > 0.0 || self.initial_spread > 0.0,
            || "channel.dispersion_coeff and channel.initial_spread cannot both be 0".into(),
        )?;
        check(self.sample_interval > 0.0, || {
            format!(
                "channel.sample_interval must be > 0, got {}",
                self.sample_interval
            )
        })?;
        check(self.noise_std >= 0.0, || {
            format!("channel.noise_std must be >= 0, got {}", self.noise_std)
        })?;
        check(self.spike_rate >= 0.0, || {
            format!("channel.spike_rate must be >= 0, got {}", self.spike_rate)
        })?;
        check(
            self.spike_rate == 0.0 || self.spike_amplitude_max > 0.0,
            || "channel.spike_amplitude_max must be > 0 when spikes are enabled".into(),
        )?;
        check(self.max_samples >= 1, || {
            "channel.max_samples must be >= 1".into()
        })?;
        Ok(())
    }
}

/// Mean velocity in m/s of `flow_rate` L/min through a round tube of `tube_diameter` m.
pub fn mean_flow_velocity(flow_rate: f64, tube_diameter: f64) -> f64 {
    let q_m3_per_s = flow_rate * 1e-3 / 60.0;
    let area = std::f64::consts::PI * tube_diameter * tube_diameter / 4.0;
    q_m3_per_s / area
}

/// One pass of a bolus over the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPass {
    /// 0 for the direct arrival, `k` after `k` full circulations.
    pub pass: u32,
    pub center: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

impl EchoPass {
    pub fn value_at(&self, t: f64) -> f64 {
        let z = (t - self.center) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// Every retained pass of `event` at flow velocity `velocity`.
pub fn echo_passes(event: &Injection, params: &ChannelParams, velocity: f64) -> Vec<EchoPass> {
    let mut out = Vec::new();
    let floor = params.echo_cutoff * event.dose;
    let mut amplitude = event.dose;
    let mut pass = 0u32;
    while amplitude >= floor {
        let path = params.distance_to_sensor + f64::from(pass) * params.loop_length;
        let center = event.midpoint() + path / velocity;
        let sigma = params.initial_spread + params.dispersion_coeff * (center - event.start).sqrt();
        out.push(EchoPass {
            pass,
            center,
            amplitude,
            sigma,
        });
        amplitude *= params.pass_decay;
        pass += 1;
    }
    out
}

fn checked_velocity(params: &ChannelParams) -> Result<f64> {
    let v = mean_flow_velocity(params.flow_rate, params.tube_diameter);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(format!(
            "degenerate flow: mean velocity is {v} m/s"
        )));
    }
    Ok(v)
}

/// Renders `schedule` into a sensor trace starting at `t = 0`.
///
/// Output depends only on the arguments; equal inputs give bit-identical traces.
pub fn simulate(schedule: &InjectionSchedule, params: &ChannelParams) -> Result<SensorTrace> {
    params.validate()?;
    let velocity = checked_velocity(params)?;
    let dt = params.sample_interval;

    let passes: Vec<EchoPass> = schedule
        .events()
        .iter()
        .flat_map(|e| echo_passes(e, params, velocity))
        .collect();

    let end = passes
        .iter()
        .map(|p| p.center + TAIL_SIGMAS * p.sigma)
        .fold(schedule.total_span(), f64::max);
    let bins = (end / dt).ceil();
    if !bins.is_finite() || bins > params.max_samples as f64 {
        return Err(Error::Resource(format!(
            "trace would need {bins} samples, cap is {}",
            params.max_samples
        )));
    }
    let n = (bins as usize).max(1);
    let mut samples = vec![0.0; n];

    for p in &passes {
        let reach = PULSE_SUPPORT_SIGMAS * p.sigma;
        let lo = ((p.center - reach) / dt - 0.5).floor().max(0.0) as usize;
        let hi = (((p.center + reach) / dt - 0.5).ceil().max(0.0) as usize).min(n - 1);
        for (i, s) in samples.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *s += p.value_at((i as f64 + 0.5) * dt);
        }
    }

    if params.noise_std > 0.0 {
        let mut rng = SimRng::new(params.rng_seed, STREAM_NOISE);
        for s in samples.iter_mut() {
            *s += params.noise_std * rng.standard_normal();
        }
    }

    if params.spike_rate > 0.0 {
        let mut rng = SimRng::new(params.rng_seed, STREAM_SPIKES);
        let span = n as f64 * dt;
        let mut t = rng.exponential(params.spike_rate);
        while t < span {
            let bin = ((t / dt) as usize).min(n - 1);
            samples[bin] += params.spike_amplitude_max * rng.uniform_open0();
            t += rng.exponential(params.spike_rate);
        }
    }

    for s in samples.iter_mut() {
        *s = s.max(0.0);
    }
    SensorTrace::new(dt, 0.0, samples)
}
