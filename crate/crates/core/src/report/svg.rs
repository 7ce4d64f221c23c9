//! Minimal SVG writer. Every coordinate is printed with four decimals so output
//! is byte-stable.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
pub const MARGIN: f64 = 50.0;

/// Qualitative palette, cycled by series index.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            body: String::new(),
            width,
            height,
        }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"/>"#,
            fmt4(x1),
            fmt4(y1),
            fmt4(x2),
            fmt4(y2),
            fmt4(width)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dashed: bool) {
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{},{}", fmt4(x), fmt4(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}"{dash}/>"#,
            pts.join(" "),
            fmt4(width)
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="{stroke}"/>"#,
            fmt4(x),
            fmt4(y),
            fmt4(w.max(0.0)),
            fmt4(h.max(0.0))
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            fmt4(cx),
            fmt4(cy),
            fmt4(r)
        );
    }

    /// `anchor` is one of start, middle, end.
    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="{anchor}" font-family="sans-serif">{}</text>"#,
            fmt4(x),
            fmt4(y),
            fmt4(size),
            escape(content)
        );
    }

    /// Finishes the document; `metadata` goes into a `<metadata>` element.
    pub fn finish(self, title: &str, metadata: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<title>{}</title>\n<metadata>{}</metadata>\n<rect x=\"0.0000\" y=\"0.0000\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            escape(title),
            escape(metadata),
            self.body,
            w = fmt4(self.width),
            h = fmt4(self.height),
        )
    }
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub d0: f64,
    pub d1: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Scale {
    pub fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if (d1 - d0).abs() < 1e-12 { (d0 - 0.5, d1 + 0.5) } else { (d0, d1) };
        Scale { d0, d1, p0, p1 }
    }

    pub fn map(&self, x: f64) -> f64 {
        self.p0 + (x - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

/// Axes frame with min/max tick labels on both axes.
pub fn axes(svg: &mut Svg, xs: Scale, ys: Scale, x_label: &str, y_label: &str) {
    let (left, right) = (xs.p0, xs.p1);
    let (bottom, top) = (ys.p0, ys.p1);
    svg.line(left, bottom, right, bottom, "#000000", 1.0);
    svg.line(left, bottom, left, top, "#000000", 1.0);
    svg.text(left, bottom + 15.0, 10.0, "middle", &fmt4(xs.d0));
    svg.text(right, bottom + 15.0, 10.0, "middle", &fmt4(xs.d1));
    svg.text(left - 5.0, bottom, 10.0, "end", &fmt4(ys.d0));
    svg.text(left - 5.0, top + 4.0, 10.0, "end", &fmt4(ys.d1));
    svg.text((left + right) / 2.0, bottom + 32.0, 12.0, "middle", x_label);
    svg.text(left - 8.0, top - 10.0, 12.0, "start", y_label);
}
