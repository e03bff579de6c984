//! Minimal SVG line plot of accuracy against SNR, one curve per variant.

use std::fmt::Write as _;

use super::sweep::AccuracyTable;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 170.0, 40.0, 60.0); // left, right, top, bottom
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SNR columns that parse as numbers are placed on a numeric axis; any
/// other (such as `clean`) is placed one step past the largest value.
pub fn accuracy_vs_snr_svg(table: &AccuracyTable, title: &str) -> String {
    let numeric: Vec<Option<f64>> = table.snrs.iter().map(|s| s.parse::<f64>().ok()).collect();
    let (mut lo, mut hi) = numeric.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let step = if hi > lo { (hi - lo) / 4.0 } else { 1.0 };
    let xs: Vec<f64> = numeric.iter().map(|v| v.unwrap_or(hi + step)).collect();
    let x_max = xs.iter().cloned().fold(hi, f64::max);
    let x_min = lo;
    let span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let (ml, mr, mt, mb) = MARGIN;
    let px = |x: f64| ml + (x - x_min) / span * (WIDTH - ml - mr);
    let py = |y: f64| HEIGHT - mb - y * (HEIGHT - mt - mb);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (ml + WIDTH - mr) / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, py(0.0), WIDTH - mr, py(0.0));
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{}" x2="{ml}" y2="{}" stroke="black"/>"#, py(0.0), py(1.0));
    for i in 0..=10 {
        let y = i as f64 / 10.0;
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#dddddd"/>"##, py(y), WIDTH - mr);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{:.1}</text>"#, ml - 6.0, py(y) + 4.0, y);
    }
    for (label, &x) in table.snrs.iter().zip(&xs) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, px(x), HEIGHT - mb + 18.0, escape(label));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB)</text>"#, (ml + WIDTH - mr) / 2.0, HEIGHT - 14.0);
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Accuracy</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);

    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    for (v, name) in table.variants.iter().enumerate() {
        let color = PALETTE[v % PALETTE.len()];
        let pts: Vec<String> = order
            .iter()
            .filter_map(|&i| table.means[v][i].map(|m| format!("{:.2},{:.2}", px(xs[i]), py(m))))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        for p in &pts {
            let (x, y) = p.split_once(',').expect("pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = mt + 20.0 + 20.0 * v as f64;
        let lx = WIDTH - mr + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text class="legend" x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Legend entries of an SVG written by [`accuracy_vs_snr_svg`].
pub fn legend_entries(svg: &str) -> Vec<String> {
    svg.lines()
        .filter(|l| l.contains(r#"class="legend""#))
        .filter_map(|l| {
            let start = l.find('>')? + 1;
            let end = l.rfind("</text>")?;
            Some(l[start..end].replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&"))
        })
        .collect()
}
