//! CSV artifacts: traces, schedules, peaks, bit strings.
//!
//! All files are UTF-8, comma separated, `.` decimal, LF line endings, with a
//! fixed header row. Times are written with 6 decimals and amplitudes/doses with
//! 9 significant digits. Readers re-check every invariant of the target type.
//!
//! Writers truncate their target; two writers must not share a path concurrently.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dsp::{Peak, PeakSet};
use crate::error::{Error, Result};
use crate::modem::{BitSequence, Injection, InjectionSchedule};
use crate::trace::SensorTrace;

pub const TRACE_HEADER: [&str; 2] = ["time_s", "amplitude"];
pub const SCHEDULE_HEADER: [&str; 3] = ["start_s", "duration_s", "dose"];
pub const PEAKS_HEADER: [&str; 2] = ["time_s", "amplitude"];

/// Largest deviation of a row spacing from the inferred sample interval.
pub const SPACING_TOLERANCE_S: f64 = 1e-6;

/// Formats `x` with 9 significant digits, as plain decimal where that stays
/// short and in exponent form otherwise. Trailing zeros are dropped.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn format_time(t: f64) -> String {
    format!("{t:.6}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

struct Row {
    line: u64,
    values: Vec<f64>,
}

fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let csv_err = |e: csv::Error| -> Error {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(path, source),
            other => format_err(path, line, format!("{other:?}")),
        }
    };

    let found = reader.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(format_err(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(format_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: col + 1,
                        message: format!("`{cell}` is not a finite number ({})", header[col]),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(Row { line, values });
    }
    Ok(rows)
}

fn write_lines<I>(path: &Path, header: &[&str], lines: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let mut emit = |s: &str| -> std::io::Result<()> {
        out.write_all(s.as_bytes())?;
        out.write_all(b"\n")
    };
    emit(&header.join(",")).map_err(|e| io_err(path, e))?;
    for line in lines {
        emit(&line).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads a `time_s,amplitude` trace. Times are bin starts; the interval is taken
/// from the first two rows and every later spacing must agree within
/// [`SPACING_TOLERANCE_S`].
pub fn read_trace(path: impl AsRef<Path>) -> Result<SensorTrace> {
    let path = path.as_ref();
    let rows = read_numeric_csv(path, &TRACE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    if rows.len() < 2 {
        return Err(format_err(
            path,
            rows[0].line,
            "at least two rows are needed to infer the sample interval",
        ));
    }
    let t0 = rows[0].values[0];
    // Strip float noise from the subtraction; file times carry 6 decimals.
    let dt = ((rows[1].values[0] - t0) * 1e9).round() / 1e9;
    if dt <= 0.0 {
        return Err(format_err(
            path,
            rows[1].line,
            "times must be strictly ascending",
        ));
    }
    for w in rows.windows(2) {
        let step = w[1].values[0] - w[0].values[0];
        if (step - dt).abs() > SPACING_TOLERANCE_S + 1e-12 {
            return Err(format_err(
                path,
                w[1].line,
                format!(
                    "non-uniform spacing: step {step:.9} s differs from sample interval {dt:.9} s"
                ),
            ));
        }
    }
    let samples = rows.iter().map(|r| r.values[1]).collect();
    SensorTrace::new(dt, t0, samples)
}

pub fn write_trace(trace: &SensorTrace, path: impl AsRef<Path>) -> Result<()> {
    let lines = trace
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| format!("{},{}", format_time(trace.bin_start(n)), format_sig9(x)));
    write_lines(path.as_ref(), &TRACE_HEADER, lines)
}

/// Reads a `start_s,duration_s,dose` schedule. The span ends with the last event.
pub fn read_schedule(path: impl AsRef<Path>) -> Result<InjectionSchedule> {
    let path = path.as_ref();
    let rows = read_numeric_csv(path, &SCHEDULE_HEADER)?;
    let events: Vec<Injection> = rows
        .iter()
        .map(|r| Injection {
            start: r.values[0],
            duration: r.values[1],
            dose: r.values[2],
        })
        .collect();
    let span = events.last().map_or(0.0, Injection::end);
    if let Some((i, rule)) = InjectionSchedule::find_violation(&events, span) {
        return Err(format_err(path, rows[i].line, rule.to_string()));
    }
    InjectionSchedule::new(events, span)
}

pub fn write_schedule(schedule: &InjectionSchedule, path: impl AsRef<Path>) -> Result<()> {
    let lines = schedule.events().iter().map(|e| {
        format!(
            "{},{},{}",
            format_time(e.start),
            format_time(e.duration),
            format_sig9(e.dose)
        )
    });
    write_lines(path.as_ref(), &SCHEDULE_HEADER, lines)
}

pub fn read_peaks(path: impl AsRef<Path>) -> Result<PeakSet> {
    let path = path.as_ref();
    let rows = read_numeric_csv(path, &PEAKS_HEADER)?;
    if let Some(w) = rows.windows(2).find(|w| w[1].values[0] <= w[0].values[0]) {
        return Err(format_err(
            path,
            w[1].line,
            "peak times must be strictly ascending",
        ));
    }
    PeakSet::new(
        rows.iter()
            .map(|r| Peak {
                time: r.values[0],
                amplitude: r.values[1],
            })
            .collect(),
    )
}

pub fn write_peaks(peaks: &PeakSet, path: impl AsRef<Path>) -> Result<()> {
    let lines = peaks
        .peaks()
        .iter()
        .map(|p| format!("{},{}", format_time(p.time), format_sig9(p.amplitude)));
    write_lines(path.as_ref(), &PEAKS_HEADER, lines)
}

/// Reads a single line of `0`/`1` characters. A trailing newline is allowed.
pub fn read_bits(path: impl AsRef<Path>) -> Result<BitSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let body = text
        .strip_suffix('\n')
        .map(|s| s.strip_suffix('\r').unwrap_or(s))
        .unwrap_or(&text);
    if let Some((i, c)) = body
        .chars()
        .enumerate()
        .find(|(_, c)| !matches!(c, '0' | '1'))
    {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: i + 1,
            message: format!("invalid bit character {c:?}"),
        });
    }
    Ok(body.parse().expect("validated bit string"))
}

pub fn write_bits(bits: &BitSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format!("{bits}\n")).map_err(|e| io_err(path, e))
}
