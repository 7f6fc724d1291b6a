//! Building blocks for a microbubble on-off keying link.
//!
//! The crate is organised along the signal chain:
//!
//! * [`modem`] turns bits into timed injections and detected peaks back into bits,
//!   and provides the closed-form rate figures of the timing scheme.
//! * [`channel`] simulates the recirculating flow loop and the binned sensor.
//! * [`dsp`] smooths sensor traces (moving average, scalar Kalman) and picks peaks.
//! * [`metrics`] matches detections against ground truth and computes F1/BER/BSR.
//! * [`io`] reads and writes every artifact as CSV.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod io;
pub mod metrics;
pub mod modem;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};
pub use trace::SensorTrace;
