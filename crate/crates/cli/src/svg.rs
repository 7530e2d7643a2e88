//! Self-contained SVG histograms on a logarithmic abscissa.

use std::fmt::Write;

pub const BINS: usize = 50;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Logarithmically spaced bin edges covering every positive value.
pub fn log_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let positive = values.iter().copied().filter(|v| *v > 0.0 && v.is_finite());
    let (mut lo, mut hi) =
        positive.fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        lo = 1.0;
        hi = 10.0;
    }
    if hi / lo < 1.0 + 1e-9 {
        lo /= 1.5;
        hi *= 1.5;
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..=bins)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / bins as f64))
        .collect()
}

/// Counts per bin; the last bin is closed on the right.
pub fn bin_counts(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    for &v in values {
        if !(v >= edges[0] && v <= edges[bins]) {
            continue;
        }
        let idx = edges
            .partition_point(|&e| e <= v)
            .saturating_sub(1)
            .min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

pub fn histogram(title: &str, x_label: &str, series: &[(&str, &[f64])]) -> String {
    let all: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let edges = log_edges(&all, BINS);
    let counts: Vec<Vec<usize>> = series.iter().map(|(_, v)| bin_counts(v, &edges)).collect();
    let peak = counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let (lo, hi) = (edges[0].log10(), edges[BINS].log10());
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |v: f64| LEFT + plot_w * (v.log10() - lo) / (hi - lo);
    let y = |c: f64| TOP + plot_h * (1.0 - c / peak);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (k, c) in counts.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for (b, &n) in c.iter().enumerate().filter(|(_, n)| **n > 0) {
            let (x0, x1) = (x(edges[b]), x(edges[b + 1]));
            let top = y(n as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.4" stroke="{color}" stroke-width="0.5"/>"#,
                x1 - x0,
                TOP + plot_h - top
            );
        }
    }
    let base = TOP + plot_h;
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{base} H{:.1}" fill="none" stroke="black"/>"#,
        LEFT + plot_w
    );
    for t in 0..=4 {
        let v = 10f64.powf(lo + (hi - lo) * f64::from(t) / 4.0);
        let px = x(v);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{base}" x2="{px:.2}" y2="{:.1}" stroke="black"/><text x="{px:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            base + 5.0,
            base + 18.0,
            tick_label(v)
        );
    }
    for t in 0..=4 {
        let c = peak * f64::from(t) / 4.0;
        let py = y(c);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            c.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    for (k, (name, _)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let ly = TOP + 8.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w - 150.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{color}" fill-opacity="0.4" stroke="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            ly + 10.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    if (0.01..1e4).contains(&v) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
