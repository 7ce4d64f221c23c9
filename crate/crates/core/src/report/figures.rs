//! Figure builders. Each returns a complete SVG document.

use super::svg::{axes, Scale, Svg, HEIGHT, MARGIN, PALETTE, WIDTH};
use crate::mixture::MixtureDensity;
use crate::stats::correlation::CorrelationMatrix;
use crate::stats::descriptive::BoxplotStats;
use crate::stats::kde::DensityEstimate;

const LEGEND_WIDTH: f64 = 110.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn legend(svg: &mut Svg, names: &[&str], dashed_from: Option<usize>) {
    let x = WIDTH - LEGEND_WIDTH + 10.0;
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let dashed = dashed_from.is_some_and(|d| i >= d);
        svg.polyline(&[(x, y), (x + 18.0, y)], color, 2.0, dashed);
        svg.text(x + 24.0, y + 4.0, 10.0, "start", name);
    }
}

/// Overlaid density curves, one per named series.
pub fn density_overlay(title: &str, curves: &[(&str, &DensityEstimate<f64>)], metadata: &str) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let (x0, x1) = extent(curves.iter().flat_map(|(_, d)| d.grid.iter().copied()));
    let (_, y1) = extent(curves.iter().flat_map(|(_, d)| d.density.iter().copied()));
    let (x0, x1, y1) = if x0.is_finite() { (x0, x1, y1) } else { (0.0, 1.0, 1.0) };
    let xs = Scale::new(x0, x1, MARGIN, WIDTH - LEGEND_WIDTH);
    let ys = Scale::new(0.0, y1, HEIGHT - MARGIN, MARGIN);
    axes(&mut svg, xs, ys, "value", "density");
    for (i, (_, d)) in curves.iter().enumerate() {
        let pts: Vec<(f64, f64)> = d.grid.iter().zip(&d.density).map(|(&x, &y)| (xs.map(x), ys.map(y))).collect();
        svg.polyline(&pts, PALETTE[i % PALETTE.len()], 1.5, false);
    }
    let names: Vec<&str> = curves.iter().map(|(n, _)| *n).collect();
    legend(&mut svg, &names, None);
    svg.text(WIDTH / 2.0, 20.0, 14.0, "middle", title);
    svg.finish(title, metadata)
}

/// Side-by-side box plots with 1.5 IQR whiskers and outlier dots.
pub fn box_plots(title: &str, boxes: &[(&str, &BoxplotStats<f64>)], metadata: &str) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let (y0, y1) = extent(boxes.iter().flat_map(|(_, b)| [b.min, b.max]));
    let (y0, y1) = if y0.is_finite() { (y0, y1) } else { (0.0, 1.0) };
    let xs = Scale::new(0.0, boxes.len().max(1) as f64, MARGIN, WIDTH - MARGIN);
    let ys = Scale::new(y0, y1, HEIGHT - MARGIN, MARGIN);
    axes(&mut svg, xs, ys, "", "value");
    let half = 0.3 * (xs.map(1.0) - xs.map(0.0));
    for (i, (name, b)) in boxes.iter().enumerate() {
        let cx = xs.map(i as f64 + 0.5);
        let color = PALETTE[i % PALETTE.len()];
        svg.line(cx, ys.map(b.lower_whisker), cx, ys.map(b.q1), "#000000", 1.0);
        svg.line(cx, ys.map(b.q3), cx, ys.map(b.upper_whisker), "#000000", 1.0);
        svg.line(cx - half / 2.0, ys.map(b.lower_whisker), cx + half / 2.0, ys.map(b.lower_whisker), "#000000", 1.0);
        svg.line(cx - half / 2.0, ys.map(b.upper_whisker), cx + half / 2.0, ys.map(b.upper_whisker), "#000000", 1.0);
        svg.rect(cx - half, ys.map(b.q3), 2.0 * half, ys.map(b.q1) - ys.map(b.q3), color, "#000000");
        svg.line(cx - half, ys.map(b.median), cx + half, ys.map(b.median), "#000000", 2.0);
        for &o in &b.outliers {
            svg.circle(cx, ys.map(o), 2.0, "#000000");
        }
        svg.text(cx, HEIGHT - MARGIN + 15.0, 10.0, "middle", name);
    }
    svg.text(WIDTH / 2.0, 20.0, 14.0, "middle", title);
    svg.finish(title, metadata)
}

fn heat_color(r: f64) -> String {
    // white at 0, red towards +1, blue towards -1
    let t = r.clamp(-1.0, 1.0);
    let fade = |v: f64| (255.0 * (1.0 - v.abs())).round() as u8;
    if t >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(t), fade(t))
    } else {
        format!("#{:02x}{:02x}ff", fade(t), fade(t))
    }
}

/// Correlation heat map; every cell is annotated with r to two decimals.
pub fn heat_map(title: &str, m: &CorrelationMatrix<f64>, metadata: &str) -> String {
    let k = m.labels.len();
    let side = HEIGHT - 2.0 * MARGIN;
    let cell = side / k.max(1) as f64;
    let left = (WIDTH - side) / 2.0;
    let mut svg = Svg::new(WIDTH, HEIGHT);
    for i in 0..k {
        for j in 0..k {
            let r = m.r[i][j];
            let (x, y) = (left + cell * j as f64, MARGIN + cell * i as f64);
            svg.rect(x, y, cell, cell, &heat_color(r), "#ffffff");
            svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, 12.0, "middle", &format!("{r:.2}"));
        }
        svg.text(left - 6.0, MARGIN + cell * (i as f64 + 0.5) + 4.0, 12.0, "end", &m.labels[i]);
        svg.text(left + cell * (i as f64 + 0.5), MARGIN + side + 16.0, 12.0, "middle", &m.labels[i]);
    }
    svg.text(WIDTH / 2.0, 20.0, 14.0, "middle", title);
    svg.finish(title, metadata)
}

/// Mixture density at posterior means: dashed weighted components under a solid total.
pub fn mixture_density(title: &str, d: &MixtureDensity<f64>, metadata: &str) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let (x0, x1) = extent(d.grid.iter().copied());
    let (_, y1) = extent(d.total.iter().copied());
    let (x0, x1, y1) = if x0.is_finite() { (x0, x1, y1) } else { (0.0, 1.0, 1.0) };
    let xs = Scale::new(x0, x1, MARGIN, WIDTH - LEGEND_WIDTH);
    let ys = Scale::new(0.0, y1, HEIGHT - MARGIN, MARGIN);
    axes(&mut svg, xs, ys, "value", "density");
    let curve = |ys_: &[f64]| -> Vec<(f64, f64)> { d.grid.iter().zip(ys_).map(|(&x, &y)| (xs.map(x), ys.map(y))).collect() };
    svg.polyline(&curve(&d.total), PALETTE[0], 2.0, false);
    for (j, c) in d.components.iter().enumerate() {
        svg.polyline(&curve(c), PALETTE[(j + 1) % PALETTE.len()], 1.5, true);
    }
    let mut names = vec!["total".to_string()];
    names.extend((0..d.components.len()).map(|j| {
        format!("w={:.2} mu={:.2} sd={:.2}", d.weights[j], d.means[j], d.sds[j])
    }));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    legend(&mut svg, &refs, Some(1));
    svg.text(WIDTH / 2.0, 20.0, 14.0, "middle", title);
    svg.finish(title, metadata)
}

/// Horizontal bars for a token frequency table.
pub fn frequency_bars(title: &str, entries: &[(String, usize)], metadata: &str) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT);
    let top = entries.iter().map(|(_, c)| *c).max().unwrap_or(1).max(1) as f64;
    let label_w = 140.0;
    let row = (HEIGHT - 2.0 * MARGIN) / entries.len().max(1) as f64;
    let xs = Scale::new(0.0, top, MARGIN + label_w, WIDTH - MARGIN);
    for (i, (token, count)) in entries.iter().enumerate() {
        let y = MARGIN + row * i as f64;
        svg.text(MARGIN + label_w - 6.0, y + row * 0.7, 10.0, "end", token);
        svg.rect(xs.map(0.0), y + row * 0.1, xs.map(*count as f64) - xs.map(0.0), row * 0.8, PALETTE[0], "none");
        svg.text(xs.map(*count as f64) + 4.0, y + row * 0.7, 10.0, "start", &count.to_string());
    }
    svg.text(WIDTH / 2.0, 20.0, 14.0, "middle", title);
    svg.finish(title, metadata)
}
