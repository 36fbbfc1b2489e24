//! Minimal standalone SVG line charts of summary CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use clap::ValueEnum;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XColumn {
    M,
    K0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum YColumn {
    MeanEstimate,
    Bias,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesBy {
    Estimator,
}

impl XColumn {
    fn name(self) -> &'static str {
        match self {
            XColumn::M => "m",
            XColumn::K0 => "k0",
        }
    }
}

impl YColumn {
    fn name(self) -> &'static str {
        match self {
            YColumn::MeanEstimate => "mean_estimate",
            YColumn::Bias => "bias",
            YColumn::Mse => "mse",
        }
    }
}

impl SeriesBy {
    fn name(self) -> &'static str {
        match self {
            SeriesBy::Estimator => "estimator",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x_column: XColumn,
    pub y_column: YColumn,
    pub series_by: SeriesBy,
    pub reference_line: Option<f64>,
}

/// Points per series label, each sorted by x.
pub type Series = BTreeMap<String, Vec<(f64, f64)>>;

pub fn read_series<R: Read>(input: R, spec: &PlotSpec) -> CliResult<Series> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read CSV header: {e}")))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CliError::Usage("input CSV is empty".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("column `{name}` not found in CSV header")))
    };
    let xi = column(spec.x_column.name())?;
    let yi = column(spec.y_column.name())?;
    let si = column(spec.series_by.name())?;

    let mut series = Series::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("bad CSV row: {e}")))?;
        rows += 1;
        let parse = |i: usize| -> CliResult<f64> {
            let field = record.get(i).unwrap_or("");
            field
                .trim()
                .parse()
                .map_err(|_| CliError::Data(format!("row {rows}: `{field}` is not a number")))
        };
        let (x, y) = (parse(xi)?, parse(yi)?);
        let label = record.get(si).unwrap_or("").to_string();
        let points = series.entry(label).or_default();
        if x.is_finite() && y.is_finite() {
            points.push((x, y));
        }
    }
    if rows == 0 {
        return Err(CliError::Usage("input CSV has no data rows".into()));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    Ok(series)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn render_svg(series: &Series, spec: &PlotSpec) -> String {
    let all = series.values().flatten();
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if let Some(r) = spec.reference_line {
        y_lo = y_lo.min(r);
        y_hi = y_hi.max(r);
    }
    let (x_lo, x_hi) = padded_range(x_lo, x_hi);
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Axes with five ticks each.
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{b2}" stroke="black"/><text x="{px:.2}" y="{t}" text-anchor="middle">{}</text>"#,
            tick_label(xv),
            b = TOP + plot_h,
            b2 = TOP + plot_h + 5.0,
            t = TOP + plot_h + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{l}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{t}" y="{py:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            tick_label(yv),
            l = LEFT - 5.0,
            t = LEFT - 8.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        spec.x_column.name()
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y:.2}" text-anchor="middle" transform="rotate(-90 16 {y:.2})">{}</text>"#,
        spec.y_column.name(),
        y = TOP + plot_h / 2.0
    );

    if let Some(r) = spec.reference_line {
        let _ = writeln!(
            svg,
            r#"<line class="reference" x1="{LEFT}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            y = sy(r),
            x2 = LEFT + plot_w
        );
    }

    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(label),
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ly}" dominant-baseline="middle">{}</text></g>"#,
            escape(label),
            x2 = lx + 25.0,
            tx = lx + 32.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(reference: Option<f64>) -> PlotSpec {
        PlotSpec {
            x_column: XColumn::M,
            y_column: YColumn::MeanEstimate,
            series_by: SeriesBy::Estimator,
            reference_line: reference,
        }
    }

    #[test]
    fn groups_by_estimator_and_sorts() {
        let csv = "m,estimator,mean_estimate\n5,h2,0.3\n1,h2,0.2\n1,gev-mle,NaN\n5,gev-mle,0.4\n";
        let s = read_series(csv.as_bytes(), &spec(None)).unwrap();
        assert_eq!(s["h2"], vec![(1.0, 0.2), (5.0, 0.3)]);
        assert_eq!(s["gev-mle"], vec![(5.0, 0.4)]);
    }

    #[test]
    fn missing_column_is_usage_error() {
        let csv = "m,estimator\n1,h2\n";
        assert!(matches!(
            read_series(csv.as_bytes(), &spec(None)),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            read_series("".as_bytes(), &spec(None)),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn escapes_labels() {
        let mut s = Series::new();
        s.insert("a<b".into(), vec![(1.0, 1.0), (2.0, 2.0)]);
        let svg = render_svg(&s, &spec(Some(1.5)));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("class=\"reference\"").count(), 1);
    }
}
