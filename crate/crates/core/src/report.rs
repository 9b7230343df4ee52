//! Log-log SVG chart of `e_sup` and `kato_d` against viscosity.

use crate::diagnostics::{fit_rate, RateFit};
use crate::sweep::SweepRecord;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no records to plot")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
    fit: Option<RateFit>,
}

/// Fitted slope of one series, as shown in the chart.
pub fn series_fit(records: &[SweepRecord], value: impl Fn(&SweepRecord) -> f64) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.nu, value(r))).filter(|p| p.1 > 0.0).collect();
    fit_rate(&pts).ok()
}

pub fn render_report(records: &[SweepRecord]) -> Result<String, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let series = [
        Series {
            name: "e_sup",
            color: "#1f77b4",
            points: records.iter().map(|r| (r.nu, r.e_sup)).filter(|p| p.1 > 0.0).collect(),
            fit: series_fit(records, |r| r.e_sup),
        },
        Series {
            name: "kato_d",
            color: "#d62728",
            points: records.iter().map(|r| (r.nu, r.kato_d)).filter(|p| p.1 > 0.0).collect(),
            fit: series_fit(records, |r| r.kato_d),
        },
    ];

    let xs: Vec<f64> = records.iter().map(|r| r.nu.log10()).collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1.log10()))
        .collect();
    let span = |v: &[f64], default: (f64, f64)| -> (f64, f64) {
        if v.is_empty() {
            return default;
        }
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min).floor();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = span(&xs, (-3.0, 0.0));
    let (y0, y1) = span(&ys, (-3.0, 0.0));
    let px = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |ly: f64| HEIGHT - BOTTOM - (ly - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">relative energy and layer dissipation vs viscosity</text>"#,
        WIDTH / 2.0
    );
    let (bx0, by0, bx1, by1) = (px(x0), py(y1), px(x1), py(y0));
    let _ = writeln!(
        s,
        r#"<rect x="{bx0:.2}" y="{by0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        bx1 - bx0,
        by1 - by0
    );
    for d in (x0 as i64)..=(x1 as i64) {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{by0:.2}" x2="{x:.2}" y2="{by1:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            by1 + 18.0
        );
    }
    for d in (y0 as i64)..=(y1 as i64) {
        let y = py(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{bx0:.2}" y1="{y:.2}" x2="{bx1:.2}" y2="{y:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            bx0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">viscosity</text>"#,
        (bx0 + bx1) / 2.0,
        HEIGHT - 10.0
    );

    for (k, ser) in series.iter().enumerate() {
        for &(nu, v) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                px(nu.log10()),
                py(v.log10()),
                ser.color
            );
        }
        let label_y = by0 + 18.0 + 18.0 * k as f64;
        match &ser.fit {
            Some(fit) => {
                let (a, b) = (
                    xs.iter().cloned().fold(f64::INFINITY, f64::min),
                    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                );
                let line_y =
                    |lx: f64| (fit.intercept + fit.slope * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10;
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="5,3"/>"#,
                    px(a),
                    py(line_y(a)),
                    px(b),
                    py(line_y(b)),
                    ser.color
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{label_y:.2}" fill="{}" data-series="{}" data-slope="{}">{} slope {:.3}</text>"#,
                    bx0 + 10.0,
                    ser.color,
                    ser.name,
                    fit.slope,
                    ser.name,
                    fit.slope
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{label_y:.2}" fill="{}" data-series="{}">{} no fit</text>"#,
                    bx0 + 10.0,
                    ser.color,
                    ser.name,
                    ser.name
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_report(path: &Path, records: &[SweepRecord]) -> Result<(), ReportError> {
    let svg = render_report(records)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<SweepRecord> {
        [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&nu: &f64| SweepRecord {
                nu,
                e1_final: nu,
                e2_final: 0.0,
                e_sup: 2.0 * nu.sqrt(),
                kato_d: 0.3 * nu,
                diss_total: 1.0,
                gronwall_max_violation: 0.0,
                wall_clock: 0.0,
                grid: None,
            })
            .collect()
    }

    #[test]
    fn slopes_annotated_exactly() {
        let recs = records();
        let svg = render_report(&recs).unwrap();
        let e = series_fit(&recs, |r| r.e_sup).unwrap();
        let k = series_fit(&recs, |r| r.kato_d).unwrap();
        assert!(svg.contains(&format!(r#"data-series="e_sup" data-slope="{}""#, e.slope)));
        assert!(svg.contains(&format!(r#"data-series="kato_d" data-slope="{}""#, k.slope)));
        assert_eq!(svg, render_report(&recs).unwrap());
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.svg");
        assert!(matches!(write_report(&path, &[]), Err(ReportError::Empty)));
        assert!(!path.exists());
    }

    #[test]
    fn zero_series_renders_without_fit() {
        let mut recs = records();
        recs.iter_mut().for_each(|r| r.e_sup = 0.0);
        let svg = render_report(&recs).unwrap();
        assert!(svg.contains("e_sup no fit"));
    }
}
