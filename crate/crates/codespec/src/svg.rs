//! Hand-written SVG line charts for figure reproduction. No plotting
//! dependency; output is a self-contained `<svg>` document.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

/// One polyline series.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Dashed rendering, used for reference/fit lines.
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, dashed: false }
    }

    pub fn dashed(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, dashed: true }
    }
}

/// A simple multi-series line chart; `log_log` maps both axes through
/// log10 (non-positive points are dropped).
#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_log: bool,
    pub series: Vec<Series>,
}

impl LineChart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        LineChart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_log: false,
            series: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_log = true;
        self
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    fn transformed(&self) -> Vec<Vec<(f64, f64)>> {
        self.series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|(x, y)| !self.log_log || (*x > 0.0 && *y > 0.0))
                    .map(|(x, y)| {
                        if self.log_log {
                            (x.log10(), y.log10())
                        } else {
                            (*x, *y)
                        }
                    })
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect()
            })
            .collect()
    }

    /// Render to an SVG document string.
    pub fn render(&self) -> String {
        let data = self.transformed();
        let all: Vec<(f64, f64)> = data.iter().flatten().copied().collect();
        let (mut x0, mut x1) = bounds(all.iter().map(|p| p.0));
        let (mut y0, mut y1) = bounds(all.iter().map(|p| p.1));
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        // axes
        let _ = writeln!(
            out,
            "<path d=\"M {m} {m} L {m} {b} L {r} {b}\" stroke=\"black\" fill=\"none\" stroke-width=\"1\"/>",
            m = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
            WIDTH / 2.0,
            escape(&self.title)
        );
        let x_axis = if self.log_log { format!("log10 {}", self.x_label) } else { self.x_label.clone() };
        let y_axis = if self.log_log { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&x_axis)
        );
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&y_axis)
        );
        // axis extents
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\">{:.3}</text>",
            MARGIN,
            HEIGHT - MARGIN + 14.0,
            x0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 14.0,
            x1
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            MARGIN - 4.0,
            HEIGHT - MARGIN,
            y0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            MARGIN - 4.0,
            MARGIN + 4.0,
            y1
        );

        for (i, (series, pts)) in self.series.iter().zip(&data).enumerate() {
            if pts.is_empty() {
                continue;
            }
            let color = PALETTE[i % PALETTE.len()];
            let mut path = String::new();
            for (j, (x, y)) in pts.iter().enumerate() {
                let _ = write!(path, "{}{:.2} {:.2} ", if j == 0 { "M " } else { "L " }, sx(*x), sy(*y));
            }
            let dash = if series.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = writeln!(
                out,
                "<path d=\"{}\" stroke=\"{color}\" fill=\"none\" stroke-width=\"1.5\"{dash}/>",
                path.trim_end()
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
                WIDTH - MARGIN + 6.0,
                MARGIN + 16.0 * i as f64,
                escape(&series.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_document() {
        let chart = LineChart::new("spectrum", "component", "variance")
            .log_log()
            .with(Series::new("layer 1", (1..=50).map(|i| (i as f64, (i as f64).powf(-1.0))).collect()))
            .with(Series::dashed("fit", vec![(1.0, 1.0), (50.0, 0.02)]));
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), 3); // axes + 2 series
    }

    #[test]
    fn degenerate_ranges_survive() {
        let chart = LineChart::new("flat", "x", "y")
            .with(Series::new("s", vec![(1.0, 2.0), (1.0, 2.0)]));
        let svg = chart.render();
        assert!(svg.contains("</svg>"));
    }
}
