//! Curve emission from a scheduler trace: per-quantity CSV files plus
//! minimal hand-rolled SVG polyline charts. The CSV files are the canonical
//! output; the SVG is a convenience rendering of the same numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dmm_core::logging::read_scheduler_trace;
use dmm_core::trainer::SchedulerUpdate;

use crate::CliError;

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

/// Reads `trace` and writes `val_loss.{csv,svg}` (per attribute plus a mean
/// column), `lambda.{csv,svg}` and `tau.{csv,svg}` under `out`.
pub fn plot_curves(trace: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    let (names, updates) =
        read_scheduler_trace(trace).map_err(|e| CliError::runtime(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| CliError::runtime(format!("create {}: {e}", out.display())))?;

    let quantity = |pick: fn(&dmm_core::trainer::AttrTraceRow) -> f64,
                    with_mean: bool|
     -> Vec<Series> {
        let mut series: Vec<Series> = names
            .iter()
            .map(|n| Series {
                name: n.clone(),
                points: Vec::with_capacity(updates.len()),
            })
            .collect();
        let mut mean = Series {
            name: "mean".to_string(),
            points: Vec::with_capacity(updates.len()),
        };
        for update in &updates {
            let x = update.iteration as f64;
            let mut total = 0.0;
            for (s, row) in series.iter_mut().zip(&update.rows) {
                let v = pick(row);
                s.points.push((x, v));
                total += v;
            }
            mean.points.push((x, total / update.rows.len() as f64));
        }
        if with_mean {
            series.push(mean);
        }
        series
    };

    let mut written = Vec::new();
    for (stem, series) in [
        ("val_loss", quantity(|r| r.val_loss, true)),
        ("lambda", quantity(|r| r.lambda, false)),
        ("tau", quantity(|r| r.tau, false)),
    ] {
        let csv_path = out.join(format!("{stem}.csv"));
        write_series_csv(&csv_path, &updates, &series)?;
        let svg_path = out.join(format!("{stem}.svg"));
        fs::write(&svg_path, render_svg(stem, &series))
            .map_err(|e| CliError::runtime(format!("write {}: {e}", svg_path.display())))?;
        written.push(format!("{stem}.csv"));
        written.push(format!("{stem}.svg"));
    }
    Ok(written)
}

fn write_series_csv(
    path: &Path,
    updates: &[SchedulerUpdate],
    series: &[Series],
) -> Result<(), CliError> {
    let mut text = String::from("iteration");
    for s in series {
        let _ = write!(text, ",{}", s.name);
    }
    text.push('\n');
    for (row, update) in updates.iter().enumerate() {
        let _ = write!(text, "{}", update.iteration);
        for s in series {
            let _ = write!(text, ",{}", s.points[row].1);
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::runtime(format!("write {}: {e}", path.display())))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn render_svg(title: &str, series: &[Series]) -> String {
    let (width, height) = (720.0, 420.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 40.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x_min, x_max) = bounds(xs);
    let (y_min, y_max) = bounds(ys);
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let sx = |x: f64| left + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| top + (1.0 - (y - y_min) / y_span) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"11\">\n"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{left}\" y=\"18\" font-size=\"13\">{title}</text>"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#999\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"4\" y=\"{:.1}\">{y_max:.4}</text>\n  <text x=\"4\" y=\"{:.1}\">{y_min:.4}</text>",
        top + 10.0,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{left}\" y=\"{:.1}\">{x_min:.0}</text>\n  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{x_max:.0}</text>",
        height - 12.0,
        left + plot_w,
        height - 12.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            left + plot_w - 110.0,
            top + 14.0 * (i as f64 + 1.0),
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() {
        (0.0, 1.0)
    } else {
        (min, max)
    }
}
