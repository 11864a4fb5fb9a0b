//! Minimal self-contained SVG charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title)).unwrap();
    s
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn axes(s: &mut String, y_lo: f64, y_hi: f64, x_label: &str, y_label: &str) {
    writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    )
    .unwrap();
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let y = H - PAD - t * (H - 2.0 * PAD);
        writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            PAD - 6.0,
            y + 4.0,
            y_lo + t * (y_hi - y_lo)
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    )
    .unwrap();
}

/// Line chart of named `(x, y)` series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x_lo, x_hi) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y_lo, y_hi) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let px = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);
    let mut s = header(title);
    axes(&mut s, y_lo, y_hi, x_label, y_label);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"/>"#, path.join(" ")).unwrap();
        for &(x, y) in pts {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y)).unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD + 4.0 - 120.0,
            PAD + 16.0 * i as f64,
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (_, y_hi) = range(series.iter().flat_map(|s| s.1.iter().copied()).chain([0.0]));
    let y_lo = 0.0;
    let mut s = header(title);
    axes(&mut s, y_lo, y_hi, "", y_label);
    let group_w = (W - 2.0 * PAD) / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let gx = PAD + group_w * ci as f64 + group_w * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(ci).copied().unwrap_or(0.0).max(0.0);
            let bh = v / (y_hi - y_lo) * (H - 2.0 * PAD);
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + bar_w * si as f64,
                H - PAD - bh,
                bar_w,
                bh,
                PALETTE[si % PALETTE.len()]
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            H - PAD + 16.0,
            escape(cat)
        )
        .unwrap();
    }
    for (si, (name, _)) in series.iter().enumerate() {
        writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * si as f64,
            PALETTE[si % PALETTE.len()],
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
