//! Deterministic CSV tables and minimal log-log SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use crate::record::{Plot, Row, SweepResult};
use crate::VerifyError;

pub const CSV_HEADER: [&str; 11] =
    ["config_hash", "suite", "experiment", "criterion_id", "case", "quantity", "h", "value", "threshold", "relation", "verdict"];

/// Fixed float format shared by CSV cells and plot annotations.
pub fn format_value(v: f64) -> String {
    format!("{v:.12e}")
}

fn verdict(row: &Row) -> &'static str {
    match row.pass() {
        None => "info",
        Some(true) => "PASS",
        Some(false) => "FAIL",
    }
}

/// CSV text of `result`: header, one line per row, LF endings.
pub fn csv_string(result: &SweepResult) -> Result<String, VerifyError> {
    if result.rows.is_empty() {
        return Err(VerifyError::EmptySweep(result.name.clone()));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| VerifyError::Emit(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &result.rows {
        let h = r.h.map(format_value).unwrap_or_default();
        let t = r.threshold.map(format_value).unwrap_or_default();
        w.write_record([
            result.config_hash.as_str(),
            result.suite.name(),
            result.name.as_str(),
            r.criterion_id.as_str(),
            r.case.as_str(),
            r.quantity.as_str(),
            h.as_str(),
            format_value(r.value).as_str(),
            t.as_str(),
            r.relation.symbol(),
            verdict(r),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| VerifyError::Emit(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log line plot; each series with a slope gets a `slope = …` legend entry
/// formatted like the CSV value.
pub fn svg_string(plot: &Plot) -> Result<String, VerifyError> {
    let pts: Vec<(f64, f64)> = plot.series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(VerifyError::EmptySweep(plot.name.clone()));
    }
    if pts.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(VerifyError::Emit(format!("{}: log-log plot needs positive finite data", plot.name)));
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let (lo, hi) = pts.iter().map(f).map(f64::log10).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!("<title>{}</title>\n", escape(&plot.name)));
    out.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&plot.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&plot.y_label)
    ));
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out.push_str(&format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" ")));
        for &(x, y) in &s.points {
            out.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n", sx(x), sy(y)));
        }
        let mut legend = escape(&s.label);
        if let Some(m) = s.slope {
            legend.push_str(&format!(" slope = {}", format_value(m)));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{legend}</text>\n",
            MARGIN + 6.0,
            MARGIN + 14.0 + 14.0 * i as f64
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<(), VerifyError> {
    fs::write(path, text).map_err(|e| VerifyError::Io { path: path.to_path_buf(), source: e })
}

/// Writes `<dir>/<experiment>.csv` and one SVG per plot; returns the paths written.
pub fn emit(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, VerifyError> {
    let csv = csv_string(result)?;
    fs::create_dir_all(dir).map_err(|e| VerifyError::Io { path: dir.to_path_buf(), source: e })?;
    let mut written = Vec::new();
    let path = dir.join(format!("{}.csv", result.name));
    write(&path, &csv)?;
    written.push(path);
    for plot in &result.plots {
        let path = dir.join(format!("{}-{}.svg", result.name, plot.name));
        write(&path, &svg_string(plot)?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, Suite};
    use crate::record::Series;

    fn one_row() -> SweepResult {
        let cfg = ExperimentConfig::builtin(Suite::Decay);
        SweepResult::new(&cfg, vec![Row::at_least("C9.decay_slope", "tangential", "slope", Some(0.5), 1.07, 0.8)], vec![])
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let cfg = ExperimentConfig::builtin(Suite::Weights);
        let empty = SweepResult::new(&cfg, vec![], vec![]);
        assert!(matches!(csv_string(&empty), Err(VerifyError::EmptySweep(_))));
    }

    #[test]
    fn single_row_gives_header_and_one_line() {
        let text = csv_string(&one_row()).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "");
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].ends_with("1.070000000000e0,8.000000000000e-1,>=,PASS"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn svg_annotation_matches_csv_value() {
        let plot = Plot {
            name: "profile".into(),
            x_label: "rho".into(),
            y_label: "psi".into(),
            series: vec![Series { label: "t".into(), points: vec![(0.5, 1.0), (0.25, 0.5)], slope: Some(1.07) }],
        };
        let svg = svg_string(&plot).unwrap();
        let csv = csv_string(&one_row()).unwrap();
        let value = format_value(1.07);
        assert!(svg.contains(&format!("slope = {value}")));
        assert!(csv.contains(&value));
    }
}
