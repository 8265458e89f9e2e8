//! Standalone SVG output: sample scatters and metric-vs-epoch lines.
//!
//! Plots are plain generated text, deterministic for fixed inputs. Line
//! plots embed their raw data in `data-x`/`data-y` attributes (shortest
//! round-trip float formatting), so downstream tests can diff plotted
//! values against source CSVs without geometry math.

use crate::mat::Mat;

const PLOT_SIZE: f64 = 600.0;
const MARGIN: f64 = 50.0;

fn canvas() -> f64 {
    PLOT_SIZE + 2.0 * MARGIN
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of generated samples (`class="s"`, one marker per row) over a
/// true-data background cloud, on the square `[-extent, extent]^2`.
pub fn scatter_svg(title: &str, background: &Mat, samples: &Mat, extent: f64) -> String {
    let side = canvas();
    let to_px = |v: f64| MARGIN + (v + extent) / (2.0 * extent) * PLOT_SIZE;
    let to_py = |v: f64| MARGIN + (extent - v) / (2.0 * extent) * PLOT_SIZE;

    let mut svg = String::with_capacity(64 * (background.rows() + samples.rows()) + 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{side}\" height=\"{side}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{PLOT_SIZE}\" height=\"{PLOT_SIZE}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        side / 2.0,
        MARGIN / 2.0 + 6.0,
        esc(title)
    ));
    for row in background.iter_rows() {
        svg.push_str(&format!(
            "<circle class=\"bg\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"1\" fill=\"#b0b0b0\" fill-opacity=\"0.45\"/>\n",
            to_px(row[0]),
            to_py(row[1])
        ));
    }
    for row in samples.iter_rows() {
        svg.push_str(&format!(
            "<circle class=\"s\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"#d62728\" fill-opacity=\"0.6\"/>\n",
            to_px(row[0]),
            to_py(row[1])
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub dashed: bool,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

/// Metric-vs-epoch line plot. Solid lines for baselines, dashed for the
/// proposed arm, per `Series::dashed`.
pub fn line_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let side = canvas();
    let all_points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all_points {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if all_points.is_empty() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let pad = (y_max - y_min) * 0.05;
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let to_px = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * PLOT_SIZE;
    let to_py = |y: f64| MARGIN + (y_max - y) / (y_max - y_min) * PLOT_SIZE;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" viewBox=\"0 0 {side} {side}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{side}\" height=\"{side}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{PLOT_SIZE}\" height=\"{PLOT_SIZE}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        side / 2.0,
        MARGIN / 2.0,
        esc(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        side / 2.0,
        side - 10.0,
        esc(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        side / 2.0,
        side / 2.0,
        esc(y_label)
    ));

    // Axis ticks.
    for t in 0..=4 {
        let fx = x_min + (x_max - x_min) * t as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * t as f64 / 4.0;
        let px = to_px(fx);
        let py = to_py(fy);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#444\"/>\n",
            MARGIN + PLOT_SIZE,
            MARGIN + PLOT_SIZE + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{fx:.3}</text>\n",
            MARGIN + PLOT_SIZE + 18.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{MARGIN}\" y2=\"{py:.2}\" stroke=\"#444\"/>\n",
            MARGIN - 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{fy:.3}</text>\n",
            MARGIN - 9.0,
            py + 3.0
        ));
    }

    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", to_px(*x), to_py(*y)))
            .collect();
        let dash = if s.dashed { " stroke-dasharray=\"7 4\"" } else { "" };
        let xs: Vec<String> = s.points.iter().map(|(x, _)| format!("{x}")).collect();
        let ys: Vec<String> = s.points.iter().map(|(_, y)| format!("{y}")).collect();
        svg.push_str(&format!(
            "<polyline class=\"series\" data-label=\"{}\" data-x=\"{}\" data-y=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>\n",
            esc(&s.label),
            xs.join(" "),
            ys.join(" "),
            pts.join(" "),
            s.color
        ));
    }

    // Legend.
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * i as f64;
        let dash = if s.dashed { " stroke-dasharray=\"7 4\"" } else { "" };
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>\n",
            MARGIN + PLOT_SIZE - 150.0,
            MARGIN + PLOT_SIZE - 120.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN + PLOT_SIZE - 114.0,
            y + 3.5,
            esc(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_marker_per_sample() {
        let bg = Mat::zeros(50, 2);
        let samples = Mat::zeros(37, 2);
        let svg = scatter_svg("g0", &bg, &samples, 3.0);
        assert_eq!(svg.matches("class=\"s\"").count(), 37);
        assert_eq!(svg.matches("class=\"bg\"").count(), 50);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn line_plot_embeds_exact_values() {
        let series = [Series {
            label: "proposed".into(),
            dashed: true,
            color: "#d62728".into(),
            points: vec![(0.0, 2.0), (10.0, 0.12345678901234567), (20.0, 1.0 / 3.0)],
        }];
        let svg = line_svg("coverage", "epoch", "w1", &series);
        let data_y = svg
            .split("data-y=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .unwrap();
        let parsed: Vec<f64> = data_y.split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed[1].to_bits(), 0.12345678901234567f64.to_bits());
        assert_eq!(parsed[2].to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn output_is_deterministic() {
        let bg = Mat::from_vec(1, 2, vec![0.5, -0.5]);
        let s = Mat::from_vec(1, 2, vec![1.0, 1.0]);
        assert_eq!(scatter_svg("t", &bg, &s, 2.0), scatter_svg("t", &bg, &s, 2.0));
    }
}
