//! Minimal SVG line charts.

use std::fmt::Write;

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];

const WIDTH: f64 = 820.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Vertical line at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    /// Dashed horizontal reference lines.
    pub hlines: Vec<f64>,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl LineChart {
    fn render_into(&self, out: &mut String, top: f64) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (top + PANEL_HEIGHT - MARGIN_BOTTOM, top + MARGIN_TOP);
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let xs = span(pts().map(|p| p.0).chain(self.markers.iter().map(|m| m.x))).unwrap_or((0.0, 1.0));
        let ys = span(pts().map(|p| p.1).chain(self.hlines.iter().copied())).unwrap_or((0.0, 1.0));
        let px = |x: f64| x0 + (x - xs.0) / (xs.1 - xs.0) * (x1 - x0);
        let py = |y: f64| y0 - (y - ys.0) / (ys.1 - ys.0) * (y0 - y1);

        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            top + 18.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y0 - y1
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (xs.0 + f * (xs.1 - xs.0), ys.0 + f * (ys.1 - ys.0));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                px(xv),
                y0 + 14.0,
                label(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                py(yv) + 3.0,
                label(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            y0 + 30.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        for m in &self.markers {
            let x = px(m.x);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y1:.1}" x2="{x:.2}" y2="{y0:.1}" stroke="{}" stroke-width="1" opacity="0.7"/>"#,
                m.color
            );
        }
        for &h in &self.hlines {
            let y = py(h);
            let _ = writeln!(
                out,
                r##"<line x1="{x0:.1}" y1="{y:.2}" x2="{x1:.1}" y2="{y:.2}" stroke="#555" stroke-dasharray="4 3"/>"##
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if !path.is_empty() {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                    path.join(" ")
                );
            }
            let ly = y1 + 12.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                x1 + 10.0,
                x1 + 30.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                x1 + 35.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }

    pub fn render(&self) -> String {
        render_panels(std::slice::from_ref(self))
    }
}

/// Charts stacked vertically in one document.
pub fn render_panels(panels: &[LineChart]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if panels.is_empty() {
        let _ = writeln!(out, r#"<text x="20" y="40" font-size="14">no data</text>"#);
    }
    for (k, p) in panels.iter().enumerate() {
        p.render_into(&mut out, k as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> LineChart {
        LineChart {
            title: "scores <gesd> & \"topo\"".into(),
            x_label: "tick".into(),
            y_label: "score".into(),
            series: vec![
                Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)] },
                Series { label: "b".into(), points: vec![(0.0, 2.0), (2.0, 2.0)] },
            ],
            markers: vec![Marker { x: 1.0, color: "red" }, Marker { x: 2.0, color: "green" }],
            hlines: vec![2.5],
        }
    }

    #[test]
    fn renders_well_formed_xml() {
        let svg = render_panels(&[chart(), LineChart::default()]);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(root.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);
        let titles: Vec<&str> =
            root.descendants().filter(|n| n.has_tag_name("text")).filter_map(|n| n.text()).collect();
        assert!(titles.contains(&"scores <gesd> & \"topo\""));
        let reds = root.descendants().filter(|n| n.attribute("stroke") == Some("red")).count();
        assert_eq!(reds, 1);
    }

    #[test]
    fn degenerate_and_empty_inputs() {
        let flat = LineChart { series: vec![Series { label: "c".into(), points: vec![(3.0, 5.0)] }], ..Default::default() };
        let svg = flat.render();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        roxmltree::Document::parse(&svg).unwrap();
        let empty = render_panels(&[]);
        roxmltree::Document::parse(&empty).unwrap();
        assert!(empty.contains("no data"));
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b>&'\""), "a&lt;b&gt;&amp;&apos;&quot;");
    }
}
