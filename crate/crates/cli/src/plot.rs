//! SVG line chart of a monthly series. Missing months break the line and are
//! marked along the bottom axis.

use std::fmt::Write;

use wxfuse_core::aggregation::MonthlySeries;
use wxfuse_core::MonthValue;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn series_svg(series: &MonthlySeries, title: &str) -> String {
    let values: Vec<Option<f64>> = series
        .values
        .iter()
        .map(|v| match v {
            MonthValue::Value(x) => Some(*x),
            MonthValue::Missing => None,
        })
        .collect();
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let (mut lo, mut hi) = present
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if present.is_empty() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let n = values.len().max(2);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |i: usize| LEFT + plot_w * i as f64 / (n - 1) as f64;
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="20" font-size="14">{} ({}, missing {:.1}%)</text>"#,
        escape(title),
        escape(&series.unit.to_string()),
        series.missing_rate * 100.0
    );
    let bottom = TOP + plot_h;
    let _ = writeln!(
        svg,
        r##"<path d="M{LEFT} {TOP} V{bottom} H{}" fill="none" stroke="#444"/>"##,
        LEFT + plot_w
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let yy = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{yy:.2}" x2="{LEFT}" y2="{yy:.2}" stroke="#444"/><text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            yy + 4.0
        );
    }
    for (i, month) in series.months().enumerate() {
        if month.month == 1 || i == 0 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}-{}</text>"#,
                x(i),
                bottom + 16.0,
                month.year,
                month.month
            );
        }
    }

    // One polyline per run of present months.
    let mut runs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut current = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) => current.push((i, *v)),
            None if !current.is_empty() => runs.push(std::mem::take(&mut current)),
            None => {}
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    for run in &runs {
        let points: Vec<String> = run.iter().map(|&(i, v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
        let _ = writeln!(
            svg,
            r##"<polyline class="series" points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            points.join(" ")
        );
        for &(i, v) in run {
            let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#1f77b4"/>"##, x(i), y(v));
        }
    }
    for (i, v) in values.iter().enumerate() {
        if v.is_none() {
            let _ = writeln!(
                svg,
                r##"<rect class="missing" x="{:.2}" y="{}" width="4" height="8" fill="#d62728"/>"##,
                x(i) - 2.0,
                bottom - 8.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
