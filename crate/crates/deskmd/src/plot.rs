//! Static SVG scaling plots: wall time, efficiency, and speedup versus
//! worker count, and docking time versus conformer count. Self-contained
//! vector output, no display server required.
//!
//! Each data point also carries `data-x`/`data-y` attributes with the raw
//! values, so tests (and curious readers) can check plot content without a
//! renderer.

use crate::bench::{BenchmarkRecord, ScalingRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Walltime,
    Efficiency,
    Speedup,
    DockingTime,
}

impl PlotKind {
    pub fn file_name(&self) -> &'static str {
        match self {
            PlotKind::Walltime => "walltime.svg",
            PlotKind::Efficiency => "efficiency.svg",
            PlotKind::Speedup => "speedup.svg",
            PlotKind::DockingTime => "docking_time.svg",
        }
    }
}

/// One labeled polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Render labeled series as one SVG line chart.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidArgument("cannot plot empty input".into()));
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    // pad the y range and anchor at zero when close
    if y_min > 0.0 && y_min < 0.25 * y_max {
        y_min = 0.0;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN_B - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    ));
    // min/max tick labels
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_L}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{x_min}</text>\n",
        HEIGHT - MARGIN_B + 18.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{x_max}</text>\n",
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B + 18.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">{y_min:.4}</text>\n",
        MARGIN_L - 6.0,
        HEIGHT - MARGIN_B + 4.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">{y_max:.4}</text>\n",
        MARGIN_L - 6.0,
        MARGIN_T + 4.0
    ));

    for (si, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = COLORS[si % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            color,
            pts.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{}\" data-x=\"{}\" data-y=\"{}\"/>\n",
                sx(x),
                sy(y),
                color,
                x,
                y
            ));
        }
        // legend entry
        let ly = MARGIN_T + 16.0 * si as f64 + 8.0;
        svg.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            WIDTH - 180.0,
            WIDTH - 155.0,
            color
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            WIDTH - 148.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scaling rows as one of the worker-count plots: wall time, efficiency,
/// or speedup versus workers.
pub fn plot_scaling(label: &str, rows: &[ScalingRow], kind: PlotKind) -> Result<String> {
    plot_scaling_series(&[(label.to_string(), rows.to_vec())], kind)
}

/// Multiple labeled row sets (one per stage) on one worker-count plot.
pub fn plot_scaling_series(groups: &[(String, Vec<ScalingRow>)], kind: PlotKind) -> Result<String> {
    let (title, y_label, pick): (&str, &str, fn(&ScalingRow) -> f64) = match kind {
        PlotKind::Walltime => ("Wall-clock time vs workers", "median wall time (s)", |r| r.median_seconds),
        PlotKind::Efficiency => ("Parallel efficiency vs workers", "efficiency E(p)", |r| r.efficiency),
        PlotKind::Speedup => ("Speedup vs workers", "speedup S(p)", |r| r.speedup),
        PlotKind::DockingTime => {
            return Err(Error::InvalidArgument(
                "docking-time plots take benchmark records, not scaling rows".into(),
            ))
        }
    };
    let series: Vec<Series> = groups
        .iter()
        .map(|(label, rows)| Series {
            label: label.clone(),
            points: rows.iter().map(|r| (r.workers as f64, pick(r))).collect(),
        })
        .collect();
    line_chart_svg(title, "workers p", y_label, &series)
}

/// Docking execution time versus conformer count, one series per worker
/// count (median over repetitions).
pub fn plot_docking_time(records: &[BenchmarkRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot plot empty input".into()));
    }
    let mut worker_counts: Vec<usize> = records.iter().map(|r| r.workers).collect();
    worker_counts.sort_unstable();
    worker_counts.dedup();
    let mut series = Vec::new();
    for w in worker_counts {
        let mut workloads: Vec<usize> =
            records.iter().filter(|r| r.workers == w).map(|r| r.workload).collect();
        workloads.sort_unstable();
        workloads.dedup();
        let mut points = Vec::new();
        for n in workloads {
            let mut times: Vec<f64> = records
                .iter()
                .filter(|r| r.workers == w && r.workload == n)
                .map(|r| r.wall_seconds)
                .collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = times[times.len() / 2];
            points.push((n as f64, median));
        }
        let label = if w == 1 { "sequential".to_string() } else { format!("{w} workers") };
        series.push(Series { label, points });
    }
    line_chart_svg(
        "Docking time vs conformers",
        "conformers n",
        "median wall time (s)",
        &series,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{amdahl_model_times, BenchStage};

    #[test]
    fn efficiency_plot_has_one_polyline_with_four_vertices() {
        let rows = amdahl_model_times(0.3, 10.0, &[1, 2, 4, 8]);
        let svg = plot_scaling("MD", &rows, PlotKind::Efficiency).unwrap();
        let polylines: Vec<&str> = svg.matches("<polyline").collect();
        assert_eq!(polylines.len(), 1);
        let points_attr = svg
            .lines()
            .find(|l| l.contains("<polyline"))
            .and_then(|l| l.split("points=\"").nth(1))
            .and_then(|s| s.split('"').next())
            .unwrap();
        assert_eq!(points_attr.split_whitespace().count(), 4);
    }

    #[test]
    fn speedup_plot_leftmost_point_is_one_one() {
        let rows = amdahl_model_times(0.5, 10.0, &[1, 2, 4, 8]);
        let svg = plot_scaling("dock", &rows, PlotKind::Speedup).unwrap();
        assert!(svg.contains("data-x=\"1\" data-y=\"1\""), "missing (1,1) point:\n{svg}");
    }

    #[test]
    fn docking_time_plot_has_two_series() {
        let mut records = Vec::new();
        for &n in &[10usize, 100, 500] {
            for &(w, t) in &[(1usize, n as f64 * 0.01), (4, n as f64 * 0.004)] {
                records.push(BenchmarkRecord {
                    stage: BenchStage::Dock,
                    workload: n,
                    workers: w,
                    repetition: 0,
                    wall_seconds: t,
                });
            }
        }
        let svg = plot_docking_time(&records).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("sequential"));
    }

    #[test]
    fn empty_input_errors() {
        assert!(plot_scaling("x", &[], PlotKind::Walltime).is_err());
        assert!(plot_docking_time(&[]).is_err());
    }
}
