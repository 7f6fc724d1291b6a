//! Minimal SVG 1.1 line chart of a trace with optional peak markers and
//! ground-truth injection spans. Output is a pure function of the inputs.

use std::fmt::Write as _;

use bubblelink::dsp::PeakSet;
use bubblelink::modem::InjectionSchedule;
use bubblelink::SensorTrace;

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 40.0;
const TICKS: usize = 5;

struct Frame {
    t_min: f64,
    t_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (t - self.t_min) / (self.t_max - self.t_min) * plot_w
    }

    fn y(&self, v: f64) -> f64 {
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (v / self.y_max) * plot_h
    }
}

pub fn render_svg(
    trace: &SensorTrace,
    peaks: Option<&PeakSet>,
    truth: Option<&InjectionSchedule>,
) -> String {
    let n = trace.len();
    let mut t_min = trace.t0();
    let mut t_max = trace.bin_start(n.max(1));
    if let Some(s) = truth {
        for e in s.events() {
            t_min = t_min.min(e.start);
            t_max = t_max.max(e.end());
        }
    }
    if let Some(p) = peaks {
        for t in p.times() {
            t_min = t_min.min(t);
            t_max = t_max.max(t);
        }
    }
    let y_max = trace
        .max()
        .into_iter()
        .chain(
            peaks
                .into_iter()
                .flat_map(|p| p.peaks().iter().map(|p| p.amplitude)),
        )
        .fold(0.0f64, f64::max);
    let frame = Frame {
        t_min,
        t_max,
        y_max: if y_max > 0.0 { y_max * 1.05 } else { 1.0 },
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    if let Some(sched) = truth {
        let _ = writeln!(s, r#"<g class="truth" fill="black" fill-opacity="0.12">"#);
        for e in sched.events() {
            let x0 = frame.x(e.start);
            let x1 = frame.x(e.end());
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                MARGIN_TOP,
                (x1 - x0).max(0.5),
                HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
            );
        }
        let _ = writeln!(s, "</g>");
    }

    // Axes and ticks.
    let x_axis_y = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" stroke-width="1" fill="none"><line x1="{MARGIN_LEFT}" y1="{x_axis_y}" x2="{:.2}" y2="{x_axis_y}"/><line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{x_axis_y}"/></g>"#,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        s,
        r#"<g class="labels" font-family="sans-serif" font-size="11" fill="black">"#
    );
    for i in 0..=TICKS {
        let frac = i as f64 / TICKS as f64;
        let t = frame.t_min + frac * (frame.t_max - frame.t_min);
        let v = frac * frame.y_max;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.2}</text>"#,
            frame.x(t),
            x_axis_y + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            MARGIN_LEFT - 6.0,
            frame.y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(s, "</g>");

    let mut points = String::new();
    for (i, &v) in trace.samples().iter().enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let _ = write!(
            points,
            "{:.2},{:.2}",
            frame.x(trace.bin_center(i)),
            frame.y(v)
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline class="trace" fill="none" stroke="#1f77b4" stroke-width="1" points="{points}"/>"##
    );

    if let Some(p) = peaks {
        let _ = writeln!(s, r##"<g class="peaks" fill="#d62728">"##);
        for peak in p.peaks() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#,
                frame.x(peak.time),
                frame.y(peak.amplitude)
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, "</svg>");
    s
}
