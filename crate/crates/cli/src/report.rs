use std::fmt::Write as _;
use std::path::Path;

use bubblelink::io::{format_sig9, format_time};
use bubblelink::metrics::MetricsReport;

use crate::error::{CliError, Result};

pub const COMPARISON_HEADER: &str = "branch,precision,recall,f1,ber,bsr";

/// Two-column `metric,value` table for one detection run.
pub fn format_report(report: &MetricsReport, offset: f64) -> String {
    let na = |v: Option<String>| v.unwrap_or_else(|| "na".to_string());
    let mut s = String::from("metric,value\n");
    let rows = [
        ("tp", report.tp.to_string()),
        ("fp", report.fp.to_string()),
        ("fn", report.fn_.to_string()),
        ("peaks_total", report.peaks_total.to_string()),
        ("bits_sent", na(report.bits_sent.map(|n| n.to_string()))),
        ("precision", format_sig9(report.precision)),
        ("recall", format_sig9(report.recall)),
        ("f1", format_sig9(report.f1)),
        ("ber", format_sig9(report.ber)),
        ("bsr", format_sig9(report.bsr)),
        (
            "ber_bits_sent",
            na(report.ber_over_bits_sent().map(format_sig9)),
        ),
        ("offset_s", format_time(offset)),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn format_comparison<'a>(
    rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>,
) -> String {
    let mut s = format!("{COMPARISON_HEADER}\n");
    for (branch, r) in rows {
        let _ = writeln!(
            s,
            "{branch},{},{},{},{},{}",
            format_sig9(r.precision),
            format_sig9(r.recall),
            format_sig9(r.f1),
            format_sig9(r.ber),
            format_sig9(r.bsr)
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
