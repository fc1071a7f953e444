use std::fmt::Write;

use serde::Serialize;

/// Fixed-width bins over `[lo, hi]`, one count vector per series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub series: Vec<(String, Vec<usize>)>,
}

impl Histogram {
    pub fn edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bins as f64;
        (0..=self.bins).map(|i| self.lo + w * i as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,bin_lo,bin_hi,count\n");
        let e = self.edges();
        for (name, counts) in &self.series {
            for (i, c) in counts.iter().enumerate() {
                let _ = writeln!(out, "{name},{},{},{c}", e[i], e[i + 1]);
            }
        }
        out
    }
}

/// Bins every series over their joint range. Non-finite values are dropped.
pub fn histogram(series: &[(String, Vec<f64>)], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|x| x.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let w = (hi - lo) / bins as f64;
    let series = series
        .iter()
        .map(|(name, v)| {
            let mut counts = vec![0usize; bins];
            for &x in v.iter().filter(|x| x.is_finite()) {
                let b = (((x - lo) / w) as usize).min(bins - 1);
                counts[b] += 1;
            }
            (name.clone(), counts)
        })
        .collect();
    Histogram { lo, hi, bins, series }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

/// Overlaid step histograms with a legend.
pub fn render_histogram_svg(h: &Histogram, title: &str, x_label: &str) -> String {
    let (width, height, margin) = (640.0, 400.0, 50.0);
    let pw = width - 2.0 * margin;
    let ph = height - 2.0 * margin;
    let ymax = h.series.iter().flat_map(|(_, c)| c.iter().copied()).max().unwrap_or(0).max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="25" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<line x1="{margin}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{margin}" y1="{margin}" x2="{margin}" y2="{0}" stroke="black"/>"#,
        height - margin,
        width - margin
    );
    let edges = h.edges();
    for (i, e) in edges.iter().enumerate().step_by((h.bins / 5).max(1)) {
        let x = margin + pw * i as f64 / h.bins as f64;
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{e:.2}</text>"#, height - margin + 15.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, width / 2.0, height - 10.0, escape(x_label));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{ymax}</text>"#, margin - 4.0, margin + 4.0);
    for (k, (name, counts)) in h.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = format!("M {margin:.1} {:.1}", height - margin);
        for (i, c) in counts.iter().enumerate() {
            let x0 = margin + pw * i as f64 / h.bins as f64;
            let x1 = margin + pw * (i + 1) as f64 / h.bins as f64;
            let y = height - margin - ph * *c as f64 / ymax;
            let _ = write!(d, " L {x0:.1} {y:.1} L {x1:.1} {y:.1}");
        }
        let _ = write!(d, " L {:.1} {:.1}", width - margin, height - margin);
        let _ = writeln!(svg, r#"<path d="{d}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>"#);
        let ly = margin + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            width - margin - 120.0,
            ly,
            width - margin - 105.0,
            ly + 9.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
