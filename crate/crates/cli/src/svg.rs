//! Minimal static SVG writers for the two figure styles: a heat map over a
//! sweep grid and multi-series line plots. Derived artifacts only; the CSVs
//! carry the data.

use std::fmt::Write as _;

const CELL: f64 = 64.0;
const MARGIN: f64 = 80.0;

fn color(t: f64) -> String {
    // Blue (low) to red (high).
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t) as u8;
    let b = (255.0 * (1.0 - t)) as u8;
    format!("rgb({r},64,{b})")
}

/// Heat map of `values[row][col]` with numeric axis labels. `note` is drawn
/// under the title (used for the constant reference bound).
pub fn heatmap(
    title: &str,
    note: &str,
    row_labels: &[String],
    col_labels: &[String],
    values: &[Vec<f64>],
) -> String {
    let rows = row_labels.len();
    let cols = col_labels.len();
    let width = MARGIN * 2.0 + CELL * cols as f64;
    let height = MARGIN * 2.0 + CELL * rows as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in values {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = (hi - lo).max(1e-12);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-size="16">{title}</text>"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="42" fill="gray">{note}</text>"#);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let x = MARGIN + CELL * j as f64;
            let y = MARGIN + CELL * i as f64;
            let fill = color((v - lo) / span);
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="white" text-anchor="middle">{v:.3}</text>"#,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
    }
    for (j, label) in col_labels.iter().enumerate() {
        let x = MARGIN + CELL * j as f64 + CELL / 2.0;
        let y = MARGIN + CELL * rows as f64 + 18.0;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{label}</text>"#);
    }
    for (i, label) in row_labels.iter().enumerate() {
        let x = MARGIN - 8.0;
        let y = MARGIN + CELL * i as f64 + CELL / 2.0 + 4.0;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end">{label}</text>"#);
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot of one or more `(name, ys)` series over shared categorical
/// x-axis labels (evenly spaced).
pub fn line_plot(
    title: &str,
    x_label: &str,
    x_labels: &[String],
    series: &[(String, Vec<f64>)],
) -> String {
    let width = 640.0;
    let height = 420.0;
    let plot_w = width - 2.0 * MARGIN;
    let plot_h = height - 2.0 * MARGIN;
    let n = x_labels.len().max(2);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, ys) in series {
        for &v in ys {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = (hi - lo).max(1e-12);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="24" font-size="16">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for (si, (name, ys)) in series.iter().enumerate() {
        let stroke = palette[si % palette.len()];
        let points: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = MARGIN + plot_w * i as f64 / (n - 1) as f64;
                let y = MARGIN + plot_h * (1.0 - (v - lo) / span);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * si as f64 + 12.0;
        let lx = MARGIN + plot_w - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{stroke}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, lx + 26.0, ly + 4.0);
    }
    for (i, label) in x_labels.iter().enumerate() {
        let x = MARGIN + plot_w * i as f64 / (n - 1) as f64;
        let y = MARGIN + plot_h + 18.0;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{label}</text>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        MARGIN + plot_w / 2.0,
        height - 16.0
    );
    let _ = writeln!(s, r#"<text x="12" y="{MARGIN}">{hi:.4}</text>"#);
    let _ = writeln!(s, r#"<text x="12" y="{:.1}">{lo:.4}</text>"#, MARGIN + plot_h);
    s.push_str("</svg>\n");
    s
}
