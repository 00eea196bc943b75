//! Two-panel SVG histogram of MP power and WAP across alternatives.

use std::fmt::Write;

use num_traits::ToPrimitive;

use crate::exact;
use crate::freq::PowerReport;
use crate::population::Design;

/// Histogram bin width; bins are `[k w, (k + 1) w)`.
pub const BIN_WIDTH: f64 = 0.005;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 55.0;

/// Bin index of `x`, computed exactly so values on a bin edge fall right.
fn bin_of(x: f64) -> i64 {
    match exact::from_f64(x) {
        Ok(r) => (r * exact::ratio(200, 1)).floor().to_integer().to_i64().unwrap_or(0),
        Err(_) => 0,
    }
}

struct Histogram {
    first: i64,
    counts: Vec<usize>,
}

fn histogram(values: &[f64]) -> Histogram {
    let bins: Vec<i64> = values.iter().map(|&v| bin_of(v)).collect();
    let first = bins.iter().copied().min().unwrap_or(0);
    let last = bins.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0; (last - first + 1) as usize];
    for b in bins {
        counts[(b - first) as usize] += 1;
    }
    Histogram { first, counts }
}

fn nice_step(max: usize) -> usize {
    let mut step = 1;
    for s in [1, 2, 5].iter().cycle().scan(1usize, |mag, &m| {
        let v = m * *mag;
        if m == 5 {
            *mag *= 10;
        }
        Some(v)
    }) {
        step = s;
        if max / s <= 6 {
            break;
        }
    }
    step
}

fn panel(svg: &mut String, x0: f64, title: &str, label: &str, color: &str, h: &Histogram) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let left = x0 + MARGIN_L;
    let bottom = MARGIN_T + plot_h;
    let ymax = h.counts.iter().copied().max().unwrap_or(1).max(1);
    let nb = h.counts.len() as f64;
    let bw = plot_w / nb;
    let _ = writeln!(svg, r#"<g class="panel">"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="14">{title}</text>"#,
        left + plot_w / 2.0
    );
    for (i, &c) in h.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let bh = plot_h * c as f64 / ymax as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" stroke="black" stroke-width="0.5"><title>[{:.3}, {:.3}): {c}</title></rect>"#,
            left + bw * i as f64,
            bottom - bh,
            bw,
            bh,
            (h.first + i as i64) as f64 * BIN_WIDTH,
            (h.first + i as i64 + 1) as f64 * BIN_WIDTH
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{left:.2}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="black"/>"#,
        left + plot_w
    );
    let _ = writeln!(svg, r#"<line x1="{left:.2}" y1="{MARGIN_T:.2}" x2="{left:.2}" y2="{bottom:.2}" stroke="black"/>"#);
    let label_every = ((nb / 6.0).ceil() as usize).max(1);
    for i in (0..=h.counts.len()).step_by(label_every) {
        let x = left + bw * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{:.3}</text>"#,
            bottom + 14.0,
            (h.first + i as i64) as f64 * BIN_WIDTH
        );
    }
    let step = nice_step(ymax);
    let mut tick = 0;
    while tick <= ymax {
        let y = bottom - plot_h * tick as f64 / ymax as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{tick}</text>"#,
            left - 6.0,
            y + 3.0
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{label}</text>"#,
        left + plot_w / 2.0,
        PANEL_H - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">Number of alternatives</text>"#,
        x0 + 18.0,
        MARGIN_T + plot_h / 2.0,
        x0 + 18.0,
        MARGIN_T + plot_h / 2.0
    );
    let _ = writeln!(svg, "</g>");
}

/// Power histogram on the left, WAP histogram on the right.
pub fn histogram_svg(rows: &[PowerReport], design: Design, alpha: f64) -> String {
    let powers: Vec<f64> = rows.iter().map(|r| r.power).collect();
    let waps: Vec<f64> = rows.iter().map(|r| r.wap).collect();
    let mut svg = String::new();
    let width = 2.0 * PANEL_W;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}">"#
    );
    let _ = writeln!(svg, "<!-- monotest {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        svg,
        r#"<desc>n={} n1={} alpha={alpha} alternatives={} bin width={BIN_WIDTH}</desc>"#,
        design.n(),
        design.n1(),
        rows.len()
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(&mut svg, 0.0, "Power of the most powerful test", "Power", "#4c72b0", &histogram(&powers));
    panel(&mut svg, PANEL_W, "Weighted average power", "WAP", "#dd8452", &histogram(&waps));
    let _ = writeln!(svg, "</svg>");
    svg
}
