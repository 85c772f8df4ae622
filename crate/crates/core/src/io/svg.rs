//! SVG drawing of a vineyard: time on x, height on y, one color per vine.

use std::fmt::Write as _;

use num_traits::ToPrimitive;

use crate::interval::Rat;
use crate::vineyard::Vineyard;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn f(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(0.0)
}

struct Frame {
    t0: f64,
    t1: f64,
    h0: f64,
    h1: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t - self.t0) / (self.t1 - self.t0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, h: f64) -> f64 {
        HEIGHT - MARGIN - (h - self.h0) / (self.h1 - self.h0) * (HEIGHT - 2.0 * MARGIN)
    }
}

pub fn render_svg(v: &Vineyard) -> String {
    let grid = v.grid();
    let heights: Vec<f64> = v.vines().iter().flat_map(|w| w.births().iter().chain(w.deaths())).map(f).collect();
    let (mut h0, mut h1) =
        heights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &h| (lo.min(h), hi.max(h)));
    if !h0.is_finite() {
        (h0, h1) = (0.0, 1.0);
    }
    if h1 <= h0 {
        h1 = h0 + 1.0;
    }
    let fr = Frame { t0: f(grid.first()), t1: f(grid.last()), h0, h1 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (xa, xb, ya, yb) = (fr.x(fr.t0), fr.x(fr.t1), fr.y(fr.h0), fr.y(fr.h1));
    let _ = writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{xa:.2}" y1="{ya:.2}" x2="{xb:.2}" y2="{ya:.2}"/><line x1="{xa:.2}" y1="{ya:.2}" x2="{xa:.2}" y2="{yb:.2}"/></g>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">time</text>"#,
        (xa + xb) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.2}" font-size="12" transform="rotate(-90 15 {:.2})" text-anchor="middle">height</text>"#,
        (ya + yb) / 2.0,
        (ya + yb) / 2.0
    );
    for (t, label) in [(fr.t0, grid.first()), (fr.t1, grid.last())] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"#,
            fr.x(t),
            ya + 14.0
        );
    }

    // Critical times; a vineyard that fails the genericity check just gets no markers.
    if let Ok(events) = v.critical_times() {
        out.push_str("<g class=\"critical\" stroke=\"gray\" stroke-dasharray=\"4 3\">\n");
        for e in events {
            let x = fr.x(f(&e.time));
            let _ =
                writeln!(out, r#"<line data-time="{}" x1="{x:.2}" y1="{ya:.2}" x2="{x:.2}" y2="{yb:.2}"/>"#, e.time);
        }
        out.push_str("</g>\n");
    }

    for vine in v.vines() {
        let color = PALETTE[vine.id() % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<g class="vine" data-vine="{}" stroke="{color}" stroke-width="2" fill="none">"#,
            vine.id()
        );
        for path in [vine.births(), vine.deaths()] {
            let pts: Vec<String> = path
                .iter()
                .enumerate()
                .map(|(j, h)| format!("{:.2},{:.2}", fr.x(f(grid.time(vine.lo() + j))), fr.y(f(h))))
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}"/>"#, pts.join(" "));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
