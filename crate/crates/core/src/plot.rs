//! SVG rendering of spectrum and q-q CSV files.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#66a182", "#edae49", "#7f5a83", "#3d3d3d"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Data rows of a CSV with the given header; comment lines start with `#`.
/// Returns `(line number, fields)` pairs.
fn rows<'a>(text: &'a str, header: &[&str]) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut seen_header = false;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != header {
                return Err(parse_err(no, format!("expected header `{}`", header.join(","))));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(parse_err(no, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        out.push((no, fields));
    }
    if !seen_header {
        return Err(parse_err(1, "missing header row"));
    }
    if out.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no data rows"));
    }
    Ok(out)
}

fn num(line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(line, format!("`{field}` is not a number")))
}

/// One mechanism's mean spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSeries {
    pub mechanism: String,
    /// `(k, mean, stderr)`.
    pub points: Vec<(u32, f64, f64)>,
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<SpectrumSeries>> {
    let mut series: Vec<SpectrumSeries> = Vec::new();
    for (line, f) in rows(text, &["mechanism", "k", "mean_a_k", "stderr_a_k", "replicates"])? {
        let k: u32 = f[1]
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| parse_err(line, format!("`{}` is not a class size", f[1])))?;
        let point = (k, num(line, f[2])?, num(line, f[3])?);
        num(line, f[4])?;
        match series.iter_mut().find(|s| s.mechanism == f[0]) {
            Some(s) => s.points.push(point),
            None => series.push(SpectrumSeries {
                mechanism: f[0].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(series)
}

pub fn parse_qq_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    rows(text, &["quantile_index", "sample_a", "sample_b"])?
        .into_iter()
        .map(|(line, f)| Ok((num(line, f[1])?, num(line, f[2])?)))
        .collect()
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, y_max: f64, x_label: &str, y_label: &str) {
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, WIDTH - MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#);
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = y0 - (y0 - MARGIN) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 20.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

/// Grouped bar chart of mean spectra, one colour per mechanism.
pub fn spectrum_svg(series: &[SpectrumSeries], title: &str) -> Result<String> {
    let k_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).max().ok_or_else(|| parse_err(1, "no data rows"))?;
    let y_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1 + p.2))
        .fold(0.0, f64::max)
        .max(1e-9)
        * 1.1;
    let mut s = svg_open(title);
    axes(&mut s, y_max, "class size k", "mean a_k");
    let plot_w = WIDTH - 2.0 * MARGIN;
    let group = plot_w / k_max as f64;
    let bar = group * 0.8 / series.len() as f64;
    let scale = (HEIGHT - 2.0 * MARGIN) / y_max;
    for (j, ser) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        for &(k, mean, _) in &ser.points {
            let x = MARGIN + group * (k - 1) as f64 + group * 0.1 + bar * j as f64;
            let h = mean * scale;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar:.2}" height="{h:.2}" fill="{color}"/>"#,
                HEIGHT - MARGIN - h
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - MARGIN - 140.0,
            MARGIN + 16.0 * j as f64,
            WIDTH - MARGIN - 124.0,
            MARGIN + 16.0 * j as f64 + 9.0,
            escape(&ser.mechanism)
        );
    }
    for k in 1..=k_max {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{k}</text>"#,
            MARGIN + group * (k as f64 - 0.5),
            HEIGHT - MARGIN + 16.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Scatter of paired quantiles with the line `y = x`.
pub fn qq_svg(pairs: &[(f64, f64)], title: &str) -> Result<String> {
    if pairs.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    let hi = pairs.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max).max(1e-9) * 1.05;
    let mut s = svg_open(title);
    axes(&mut s, hi, "sample b quantile", "sample a quantile");
    let span_x = WIDTH - 2.0 * MARGIN;
    let span_y = HEIGHT - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + v / hi * span_x;
    let py = |v: f64| HEIGHT - MARGIN - v / hi * span_y;
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        px(0.0),
        py(0.0),
        px(hi),
        py(hi)
    );
    for &(a, b) in pairs {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1b6ca8"/>"##, px(b), py(a));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
