//! Self-contained SVG plots of 2σ(X) and 2σ(P) against time.
//!
//! Short runs draw both traces sample by sample. Long runs, where the
//! oscillation is unresolvable at plot scale, draw per-period min/max bands.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::metrics::{envelope, report, Envelope, SQUEEZING_THRESHOLD};
use crate::output::write_file;

/// Above this many periods the envelope bands replace the raw traces.
pub const ENVELOPE_MIN_PERIODS: usize = 40;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

const COLOR_X: &str = "#1f5fa8";
const COLOR_P: &str = "#c0392b";

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Ticks at 1, 2 or 5 × 10^k spacing covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for x in nice_ticks(f.x0, f.x1, 8) {
        let px = f.px(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            fmt_tick(x)
        );
    }
    for y in nice_ticks(f.y0, f.y1, 6) {
        let py = f.py(y);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn reference_line(svg: &mut String, f: &Frame, value: f64, label: &str) {
    let py = f.py(value);
    let _ = writeln!(
        svg,
        r#"<line class="reference" x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="black" stroke-width="1.5"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#,
        WIDTH - RIGHT,
        WIDTH - RIGHT - 4.0,
        py - 4.0
    );
}

fn legend(svg: &mut String, entries: &[(&str, &str)]) {
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let x = LEFT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
}

fn polyline(svg: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    svg.push_str(r#"<polyline fill="none" stroke=""#);
    svg.push_str(color);
    svg.push_str(r#"" stroke-width="1" points=""#);
    for (x, y) in pts {
        let _ = write!(svg, "{:.2},{:.2} ", f.px(x), f.py(y));
    }
    svg.push_str("\"/>\n");
}

fn band(svg: &mut String, f: &Frame, upper: &[(f64, f64)], lower: &[(f64, f64)], color: &str) {
    let _ = write!(
        svg,
        r#"<polygon class="band" fill="{color}" fill-opacity="0.35" stroke="none" points=""#
    );
    for (x, y) in upper.iter().chain(lower.iter().rev()) {
        let _ = write!(svg, "{:.2},{:.2} ", f.px(*x), f.py(*y));
    }
    svg.push_str("\"/>\n");
}

fn y_frame(x0: f64, x1: f64, y_max: f64) -> Frame {
    let top = y_max.max(SQUEEZING_THRESHOLD) * 1.05;
    Frame {
        x0,
        x1,
        y0: 0.0,
        y1: top,
    }
}

/// Raw 2σ traces of every sample.
pub fn render_trajectory_svg(traj: &Trajectory, title: &str) -> Result<String> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData(
            "a plot needs at least two samples".into(),
        ));
    }
    let reports: Vec<_> = traj
        .samples
        .iter()
        .map(|s| (s.state.t * 1e6, report(&s.state)))
        .collect();
    let y_max = reports
        .iter()
        .map(|(_, r)| r.two_sigma_x.max(r.two_sigma_p))
        .fold(0.0, f64::max);
    let f = y_frame(reports[0].0, reports[reports.len() - 1].0, y_max);
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "t (µs)", "2σ");
    polyline(
        &mut svg,
        &f,
        reports.iter().map(|(t, r)| (*t, r.two_sigma_x)),
        COLOR_X,
    );
    polyline(
        &mut svg,
        &f,
        reports.iter().map(|(t, r)| (*t, r.two_sigma_p)),
        COLOR_P,
    );
    reference_line(&mut svg, &f, SQUEEZING_THRESHOLD, "1.41");
    legend(&mut svg, &[(COLOR_X, "2σ(X)"), (COLOR_P, "2σ(P)")]);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Per-period min/max bands of 2σ(X) and 2σ(P).
pub fn render_envelope_svg(env: &Envelope, period: f64, title: &str) -> Result<String> {
    if env.periods.is_empty() {
        return Err(Error::InsufficientData("empty envelope".into()));
    }
    let mid = |i: usize| (i as f64 + 0.5) * period * 1e6;
    let upper_x: Vec<_> = env
        .periods
        .iter()
        .map(|p| (mid(p.index), p.max_x))
        .collect();
    let lower_x: Vec<_> = env
        .periods
        .iter()
        .map(|p| (mid(p.index), p.min_x))
        .collect();
    let upper_p: Vec<_> = env
        .periods
        .iter()
        .map(|p| (mid(p.index), p.max_p))
        .collect();
    let lower_p: Vec<_> = env
        .periods
        .iter()
        .map(|p| (mid(p.index), p.min_p))
        .collect();
    let y_max = env
        .periods
        .iter()
        .map(|p| p.max_x.max(p.max_p))
        .fold(0.0, f64::max);
    let last = env.periods.last().map_or(1, |p| p.index + 1);
    let f = y_frame(0.0, last as f64 * period * 1e6, y_max);
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "t (µs)", "2σ");
    band(&mut svg, &f, &upper_x, &lower_x, "#808080");
    band(&mut svg, &f, &upper_p, &lower_p, "#505050");
    reference_line(&mut svg, &f, SQUEEZING_THRESHOLD, "1.41");
    legend(
        &mut svg,
        &[
            ("#808080", "2σ(X) per-period range"),
            ("#505050", "2σ(P) per-period range"),
        ],
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Chooses raw traces or envelope bands by run length.
pub fn render_svg(traj: &Trajectory, title: &str) -> Result<String> {
    if traj.len() < 2 {
        return Err(Error::InsufficientData(
            "a plot needs at least two samples".into(),
        ));
    }
    let period = traj.model.period();
    let t_end = traj.last_state().map_or(0.0, |s| s.t);
    if t_end / period > ENVELOPE_MIN_PERIODS as f64 {
        let env = envelope(traj, traj.model.physical.omega)?;
        render_envelope_svg(&env, period, title)
    } else {
        render_trajectory_svg(traj, title)
    }
}

pub fn emit_plot(traj: &Trajectory, path: &Path, title: &str) -> Result<()> {
    let svg = render_svg(traj, title)?;
    write_file(path, svg.as_bytes())
}

/// Duan sum against time with the separability bound at 1.
pub fn render_duan_svg(times: &[f64], sums: &[f64], title: &str) -> Result<String> {
    if times.len() < 2 || times.len() != sums.len() {
        return Err(Error::InsufficientData(
            "a plot needs at least two samples".into(),
        ));
    }
    let y_max = sums.iter().copied().fold(1.0, f64::max);
    let f = Frame {
        x0: times[0] * 1e6,
        x1: times[times.len() - 1] * 1e6,
        y0: 0.0,
        y1: y_max * 1.05,
    };
    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &f, "t (µs)", "Var(X₊) + Var(P₋)");
    polyline(
        &mut svg,
        &f,
        times.iter().zip(sums).map(|(t, s)| (t * 1e6, *s)),
        COLOR_X,
    );
    reference_line(&mut svg, &f, 1.0, "1");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
