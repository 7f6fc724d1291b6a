//! End-to-end run: encode, simulate once, then score three detection branches
//! (raw, moving average, Kalman) on the same trace.
//!
//! Output tree:
//!
//! ```text
//! config.conf          resolved configuration
//! bits_tx.txt          transmitted bits, preamble included
//! schedule.csv         injections
//! comparison.csv       branch,precision,recall,f1,ber,bsr
//! raw|maf|kalman/
//!     trace.csv  peaks.csv  bits.txt  report.csv
//! ```
//!
//! Every step reads its input back from the tree, so rerunning the
//! subcommands on these files reproduces the reports byte for byte.

use std::path::Path;

use bubblelink::io;
use bubblelink::metrics::MetricsReport;
use bubblelink::modem::BitSequence;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::ops::{self, Alignment, FilterSpec};
use crate::report::{format_comparison, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Raw,
    MovingAverage,
    Kalman,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Raw, Branch::MovingAverage, Branch::Kalman];

    pub fn name(self) -> &'static str {
        match self {
            Branch::Raw => "raw",
            Branch::MovingAverage => "maf",
            Branch::Kalman => "kalman",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub branch: Branch,
    pub report: MetricsReport,
    pub decoded: BitSequence,
    /// Decoded bits after the preamble.
    pub payload: BitSequence,
    pub payload_errors: usize,
    pub delay: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub transmitted: BitSequence,
    pub payload: BitSequence,
    pub branches: Vec<BranchOutcome>,
}

impl PipelineOutcome {
    pub fn branch(&self, branch: Branch) -> &BranchOutcome {
        self.branches
            .iter()
            .find(|b| b.branch == branch)
            .expect("every branch runs")
    }
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PipelineOutcome> {
    cfg.validate()?;
    cfg.validate_for_decoding()?;
    mkdir(out_dir)?;
    write_text(&out_dir.join("config.conf"), &cfg.to_text())?;

    let transmitted = cfg.transmitted_bits();
    let payload: BitSequence = transmitted.iter().skip(cfg.preamble).collect();
    io::write_bits(&transmitted, out_dir.join("bits_tx.txt"))?;

    let schedule_path = out_dir.join("schedule.csv");
    let schedule = ops::encode(&transmitted, &cfg.timing, cfg.dose, &schedule_path)?;
    if schedule.is_empty() {
        return Err(CliError::Usage("transmission contains no 1-bits".into()));
    }

    let raw_dir = out_dir.join(Branch::Raw.name());
    mkdir(&raw_dir)?;
    let raw_trace = raw_dir.join("trace.csv");
    ops::simulate(&schedule_path, &cfg.channel, &raw_trace)?;

    let mut branches = Vec::with_capacity(3);
    for branch in Branch::ALL {
        let dir = out_dir.join(branch.name());
        mkdir(&dir)?;
        let trace = dir.join("trace.csv");
        match branch {
            Branch::Raw => {}
            Branch::MovingAverage => {
                let spec = FilterSpec::MovingAverage {
                    window: cfg.maf_window,
                };
                ops::filter(&raw_trace, &spec, &trace)?;
            }
            Branch::Kalman => {
                ops::filter(&raw_trace, &FilterSpec::Kalman(cfg.kalman), &trace)?;
            }
        }

        let peaks = dir.join("peaks.csv");
        ops::detect(&trace, &cfg.peak, &peaks)?;

        let decoded = ops::decode(
            &peaks,
            &cfg.timing,
            None,
            transmitted.len(),
            cfg.decode_window,
            &dir.join("bits.txt"),
        )?;

        let (report, _, _) = ops::evaluate(
            &peaks,
            &schedule_path,
            cfg.tolerance,
            Alignment::FirstPeak,
            Some(transmitted.len()),
            Some(&dir.join("report.csv")),
        )?;

        let rx_payload: BitSequence = decoded.bits.iter().skip(cfg.preamble).collect();
        branches.push(BranchOutcome {
            branch,
            report,
            payload_errors: rx_payload.hamming_distance(&payload),
            payload: rx_payload,
            decoded: decoded.bits,
            delay: decoded.delay,
            warning: decoded.warning,
        });
    }

    let table = format_comparison(branches.iter().map(|b| (b.branch.name(), &b.report)));
    write_text(&out_dir.join("comparison.csv"), &table)?;

    Ok(PipelineOutcome {
        transmitted,
        payload,
        branches,
    })
}
