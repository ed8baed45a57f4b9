use std::fmt::Write;

use crate::model::Scanpath;

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Circle radius in pixels for a fixation duration in milliseconds.
pub fn radius(t_ms: f64) -> f64 {
    (4.0 + 10.0 * t_ms.max(0.0) / 1000.0).min(30.0)
}

/// Scanpaths drawn over a `width × height` frame: one polyline per path and
/// a circle per fixation, labelled with its 1-based order and sized by
/// duration.
pub fn render(paths: &[Scanpath], width: f64, height: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r##"<rect width="{width}" height="{height}" fill="#f4f4f4"/>"##);
    for (k, p) in paths.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="scanpath" data-index="{k}">"#);
        if p.len() > 1 {
            let pts: Vec<String> = p.fixations.iter().map(|f| format!("{:.1},{:.1}", f.x, f.y)).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-opacity="0.6"/>"#,
                pts.join(" ")
            );
        }
        for (i, f) in p.fixations.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<circle class="fixation" cx="{:.1}" cy="{:.1}" r="{:.2}" fill="{color}" fill-opacity="0.5" stroke="{color}"/>"#,
                f.x,
                f.y,
                radius(f.t)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" dominant-baseline="central">{}</text>"#,
                f.x,
                f.y,
                i + 1
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
