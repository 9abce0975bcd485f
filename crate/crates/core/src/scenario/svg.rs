//! Minimal hand-written SVG figures.

use std::fmt::Write as _;

use super::{CostMatrix, LoadingReport};

/// Heatmap of the percent change per cell, darker is cheaper.
pub fn cost_heatmap_svg(m: &CostMatrix) -> String {
    let cell = 64.0;
    let (left, top) = (70.0, 50.0);
    let w = left + cell * m.vid_counts.len() as f64 + 20.0;
    let h = top + cell * m.dlr_counts.len() as f64 + 40.0;
    let worst = m.cells.iter().filter_map(|c| c.change_pct).fold(0.0f64, |a, p| a.min(p));
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(s, "<text x=\"{left:.0}\" y=\"18\" font-size=\"13\">{} ({}): change vs. no GETs</text>", m.case_id, m.weather);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"38\">VID lines</text>", left + cell * m.vid_counts.len() as f64 / 2.0 - 20.0);
    let _ = writeln!(
        s,
        "<text x=\"12\" y=\"{:.1}\" transform=\"rotate(-90 12 {:.1})\">DLR lines</text>",
        top + cell * m.dlr_counts.len() as f64 / 2.0 + 20.0,
        top + cell * m.dlr_counts.len() as f64 / 2.0 + 20.0
    );
    for (j, v) in m.vid_counts.iter().enumerate() {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v}</text>", left + cell * (j as f64 + 0.5), top - 4.0);
    }
    for (i, d) in m.dlr_counts.iter().enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{d}</text>", left - 6.0, y + cell / 2.0 + 4.0);
        for (j, v) in m.vid_counts.iter().enumerate() {
            let x = left + cell * j as f64;
            let (fill, label) = match m.cell(*d, *v).and_then(|c| c.change_pct) {
                Some(p) => {
                    let t = if worst < 0.0 { (p / worst).clamp(0.0, 1.0) } else { 0.0 };
                    let shade = (235.0 - 175.0 * t).round() as u8;
                    (format!("rgb({shade},{shade},255)"), format!("{p:.1}%"))
                }
                None => ("rgb(220,220,220)".to_string(), "n/a".to_string()),
            };
            let _ = writeln!(s, "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.0}\" height=\"{cell:.0}\" fill=\"{fill}\" stroke=\"white\"/>");
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>", x + cell / 2.0, y + cell / 2.0 + 4.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Baseline vs. treated mean loading per line with the 45° reference.
pub fn loading_scatter_svg(r: &LoadingReport) -> String {
    let size = 320.0;
    let pad = 50.0;
    let max = r.rows.iter().flat_map(|row| [row.baseline, row.treated]).fold(1.0f64, f64::max);
    let px = |u: f64| pad + size * u / max;
    let py = |u: f64| pad + size - size * u / max;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        size + 2.0 * pad,
        size + 2.0 * pad
    );
    let _ = writeln!(
        s,
        "<text x=\"{pad:.0}\" y=\"20\" font-size=\"13\">mean loading, {} DLR / {} VID lines (mean change {:+.4})</text>",
        r.cell.0, r.cell.1, r.mean_delta
    );
    let _ = writeln!(s, "<rect x=\"{pad:.0}\" y=\"{pad:.0}\" width=\"{size:.0}\" height=\"{size:.0}\" fill=\"none\" stroke=\"black\"/>");
    let _ = writeln!(
        s,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        px(0.0),
        py(0.0),
        px(max),
        py(max)
    );
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">baseline</text>", pad + size / 2.0, pad + size + 30.0);
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{0:.1}\" transform=\"rotate(-90 15 {0:.1})\" text-anchor=\"middle\">treated</text>",
        pad + size / 2.0
    );
    for (tick, label) in [(0.0, "0"), (max, &*format!("{max:.2}"))] {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>", px(tick), pad + size + 14.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>", pad - 4.0, py(tick) + 4.0);
    }
    for row in &r.rows {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"steelblue\"><title>line {}</title></circle>",
            px(row.baseline),
            py(row.treated),
            row.line.0
        );
    }
    s.push_str("</svg>\n");
    s
}
