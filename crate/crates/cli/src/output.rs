//! CSV and SVG writers. Every CSV starts with `#` comment lines echoing the
//! effective configuration, then a header row; floats use 17 significant digits.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use evolvolin_core::framework::EvolutionTrace;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Creates `path` (and its parent directory), writes `echo`, then `body`.
pub fn write_file<F>(path: &Path, echo: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    out.write_all(echo.as_bytes())?;
    body(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush()?;
    Ok(())
}

pub fn support_string(support: &[usize]) -> String {
    support
        .iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Exact loss against generation for each trace on a log-scaled y axis, with
/// a dashed line at `epsilon`.
pub fn loss_plot_svg(traces: &[EvolutionTrace], epsilon: f64) -> String {
    let floor = 1e-300;
    let points: Vec<Vec<(f64, f64)>> = traces
        .iter()
        .map(|t| {
            t.records
                .iter()
                .map(|r| (r.generation as f64, r.loss_exact.max(floor).log10()))
                .collect()
        })
        .collect();
    let eps_y = epsilon.max(floor).log10();
    let all = points.iter().flatten();
    let x_max = all.clone().map(|p| p.0).fold(1.0, f64::max);
    let y_lo = all.clone().map(|p| p.1).fold(eps_y, f64::min).floor();
    let y_hi = all
        .map(|p| p.1)
        .fold(eps_y, f64::max)
        .ceil()
        .max(y_lo + 1.0);
    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (sx(0.0), sx(x_max), sy(y_lo), sy(y_hi));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    let mut e = y_lo as i32;
    while e as f64 <= y_hi {
        let y = sy(e as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
        e += 1;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x1:.1}" y="{:.1}" text-anchor="end">{x_max}</text>"#,
        y0 + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">generation</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">loss</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let ey = sy(eps_y);
    let _ = writeln!(
        svg,
        r##"<line x1="{x0:.1}" y1="{ey:.1}" x2="{x1:.1}" y2="{ey:.1}" stroke="#888" stroke-dasharray="6 4"/>"##
    );
    for (i, pts) in points.iter().enumerate() {
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            COLORS[i % COLORS.len()]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_round_trippable() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn support_is_one_based() {
        assert_eq!(support_string(&[0, 4]), "1 5");
        assert_eq!(support_string(&[]), "");
    }
}
