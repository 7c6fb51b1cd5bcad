//! Static SVG scatter plot of the two mixed samples, optionally with the
//! estimated sector radii and highlighted marker genes.

use std::fmt::Write;

const SIZE: f64 = 560.0;
const MARGIN: f64 = 56.0;
const MARKER_COLORS: [&str; 2] = ["#d62728", "#1f77b4"];

#[derive(Debug, Clone, Default)]
pub struct ScatterPlot {
    pub title: String,
    pub points: Vec<[f64; 2]>,
    /// Column directions of the estimated mixing matrix.
    pub radii: Option<[[f64; 2]; 2]>,
    /// Marker gene indices into `points`, per source.
    pub markers: [Vec<usize>; 2],
}

impl ScatterPlot {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        Self {
            points,
            ..Default::default()
        }
    }

    /// Upper bound shared by both axes so the radii keep their angles.
    fn extent(&self) -> f64 {
        let m = self
            .points
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        if m > 0.0 {
            m * 1.05
        } else {
            1.0
        }
    }

    pub fn to_svg(&self) -> String {
        let extent = self.extent();
        let span = SIZE - 2.0 * MARGIN;
        let px = |v: f64| MARGIN + v / extent * span;
        let py = |v: f64| SIZE - MARGIN - v / extent * span;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        if !self.title.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
                SIZE / 2.0,
                escape(&self.title)
            );
        }
        // axes
        let (x0, y0, x1, y1) = (px(0.0), py(0.0), px(extent), py(extent));
        let _ = writeln!(
            s,
            r##"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="#333333"/>"##
        );
        for t in 0..=4 {
            let v = extent * t as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(v),
                y0 + 16.0,
                tick(v)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                py(v) + 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">sample 1</text>"#,
            SIZE / 2.0,
            SIZE - 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">sample 2</text>"#,
            SIZE / 2.0,
            SIZE / 2.0
        );

        let mut is_marker = vec![None; self.points.len()];
        for (j, set) in self.markers.iter().enumerate() {
            for &i in set {
                if i < is_marker.len() {
                    is_marker[i] = Some(j);
                }
            }
        }
        let _ = writeln!(s, r##"<g fill="#7f7f7f" fill-opacity="0.45">"##);
        for (p, m) in self.points.iter().zip(&is_marker) {
            if m.is_none() {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="1.8"/>"#,
                    px(p[0]),
                    py(p[1])
                );
            }
        }
        let _ = writeln!(s, "</g>");
        for (j, color) in MARKER_COLORS.iter().enumerate() {
            let _ = writeln!(s, r#"<g fill="{color}">"#);
            for (p, m) in self.points.iter().zip(&is_marker) {
                if *m == Some(j) {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.1}" cy="{:.1}" r="3.2"/>"#,
                        px(p[0]),
                        py(p[1])
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }

        if let Some(radii) = self.radii {
            for (j, r) in radii.iter().enumerate() {
                // extend the ray to the plot boundary
                let m = r[0].max(r[1]);
                if !(m > 0.0) {
                    continue;
                }
                let end = [r[0] / m * extent, r[1] / m * extent];
                let _ = writeln!(
                    s,
                    r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="1.5" stroke-dasharray="6 3"/>"#,
                    px(end[0]),
                    py(end[1]),
                    MARKER_COLORS[j]
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v >= 1000.0 {
        format!("{v:.0}")
    } else if v >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_only_has_no_radii() {
        let svg = ScatterPlot::new(vec![[1.0, 2.0], [3.0, 1.0]]).to_svg();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn radii_and_markers_drawn() {
        let mut p = ScatterPlot::new(vec![[1.0, 0.2], [0.2, 1.0], [0.5, 0.5]]);
        p.radii = Some([[0.9, 0.1], [0.1, 0.9]]);
        p.markers = [vec![0], vec![1]];
        p.title = "a < b".into();
        let svg = p.to_svg();
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches(r#"r="3.2""#).count(), 2);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn output_is_deterministic() {
        let p = ScatterPlot::new(vec![[0.123456, 7.0]]);
        assert_eq!(p.to_svg(), p.to_svg());
    }
}
