//! Deterministic JSON and static SVG output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Keys dropped from JSON output because they vary between runs.
const VOLATILE: [&str; 1] = ["elapsed_seconds"];

fn strip(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for k in VOLATILE {
                map.remove(k);
            }
            map.values_mut().for_each(strip);
        }
        Value::Array(items) => items.iter_mut().for_each(strip),
        _ => {}
    }
}

/// Pretty JSON without timing fields. Floats use the shortest
/// representation that round-trips.
pub fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
    strip(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Config echo for an SVG comment (`--` is not allowed inside comments).
fn comment(echo: &str) -> String {
    echo.replace("--", "- -")
}

/// `sign(x) log10(1 + |x|)`, so that eigenvalues over many decades share one plot.
pub fn symlog(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p() / std::f64::consts::LN_10
}

const SIZE: f64 = 640.0;
const PAD: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn around(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return Self { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        }
        let mx = 0.05 * (x1 - x0).max(1e-9);
        let my = 0.05 * (y1 - y0).max(1e-9);
        Self { x0: x0 - mx, x1: x1 + mx, y0: y0 - my, y1: y1 + my }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (SIZE - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        SIZE - PAD - (y - self.y0) / (self.y1 - self.y0) * (SIZE - 2.0 * PAD)
    }
}

fn header(out: &mut String, title: &str, echo: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, "<!-- config\n{}\n-->", comment(echo));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#, SIZE / 2.0);
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{PAD}" y="{PAD}" width="{w}" height="{w}" fill="none" stroke="#444"/>"##,
        w = SIZE - 2.0 * PAD
    );
    if f.x0 < 0.0 && f.x1 > 0.0 {
        let x = f.px(0.0);
        let _ = writeln!(out, r##"<line x1="{x}" y1="{PAD}" x2="{x}" y2="{}" stroke="#bbb"/>"##, SIZE - PAD);
    }
    if f.y0 < 0.0 && f.y1 > 0.0 {
        let y = f.py(0.0);
        let _ = writeln!(out, r##"<line x1="{PAD}" y1="{y}" x2="{}" y2="{y}" stroke="#bbb"/>"##, SIZE - PAD);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{xlabel}</text>"#, SIZE / 2.0, SIZE - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="10">x: [{:.3}, {:.3}]  y: [{:.3}, {:.3}]</text>"#,
        SIZE - PAD + 14.0,
        f.x0,
        f.x1,
        f.y0,
        f.y1
    );
}

/// Eigenvalues in symlog coordinates with the sector `|Im| <= |Re|, Re <= 0` shaded.
pub fn spectrum_svg(lambdas: &[Complex64], echo: &str) -> String {
    let pts: Vec<(f64, f64)> = lambdas.iter().map(|l| (symlog(l.re), symlog(l.im))).collect();
    let mut frame = Frame::around(pts.iter().copied().chain([(0.0, 0.0)]));
    // Keep the sector visible and the axes square in log-decades.
    let r = frame.x0.abs().max(frame.x1.abs()).max(frame.y0.abs()).max(frame.y1.abs());
    frame = Frame { x0: -r, x1: r.max(0.1 * r), y0: -r, y1: r };
    let mut out = String::new();
    header(&mut out, "eigenvalues (symlog: sign(x) log10(1+|x|))", echo);
    let corners = [(0.0, 0.0), (-r, r), (-r, -r)];
    let poly: Vec<String> = corners.iter().map(|(x, y)| format!("{},{}", frame.px(*x), frame.py(*y))).collect();
    let _ = writeln!(out, r##"<polygon points="{}" fill="#e6f0ff" stroke="#88a"/>"##, poly.join(" "));
    axes(&mut out, &frame, "Re lambda", "Im lambda");
    for (x, y) in pts {
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="3" fill="#c03"/>"##, frame.px(x), frame.py(y));
    }
    out.push_str("</svg>\n");
    out
}

/// Computed (filled) against predicted (open) `rho_n`.
pub fn overlay_svg(computed: &[Complex64], predicted: &[Complex64], echo: &str) -> String {
    let frame = Frame::around(computed.iter().chain(predicted).map(|z| (z.re, z.im)));
    let mut out = String::new();
    header(&mut out, "rho_n: computed (filled) and predicted (open)", echo);
    axes(&mut out, &frame, "Re rho", "Im rho");
    for z in predicted {
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="5" fill="none" stroke="#036"/>"##, frame.px(z.re), frame.py(z.im));
    }
    for z in computed {
        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="2.5" fill="#c03"/>"##, frame.px(z.re), frame.py(z.im));
    }
    out.push_str("</svg>\n");
    out
}
