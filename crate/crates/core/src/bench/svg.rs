use std::fmt::Write as _;

use super::ProfileCurve;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

fn color(i: usize) -> String {
    match PALETTE.get(i) {
        Some(c) => c.to_string(),
        None => format!("hsl({},70%,40%)", (i * 47) % 360),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained SVG 1.1 plot with one step polyline per curve and a
/// base-2 logarithmic horizontal axis.
pub fn profile_svg(title: &str, x_label: &str, curves: &[ProfileCurve]) -> String {
    let finite = curves.iter().flat_map(|c| c.abscissae.iter().copied());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| (l.min(a), h.max(a)));
    let (lo, hi) = if lo.is_finite() && lo > 0.0 { (lo, hi) } else { (1.0, 2.0) };
    let lx0 = lo.log2();
    let lx1 = (hi.log2() + 0.25).max(lx0 + 1.0);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log2() - lx0) / (lx1 - lx0) * pw;
    let sy = |y: f64| TOP + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let y = f64::from(i) / 4.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#dddddd"/><text x="{2}" y="{3:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{y:.2}</text>"##,
            sy(y),
            LEFT + pw,
            LEFT - 6.0,
            sy(y) + 4.0
        );
    }
    let mut e = lx0.ceil() as i32;
    while f64::from(e) <= lx1 {
        let x = sx(2f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{0:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{1:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">2^{e}</text>"##,
            TOP + ph,
            TOP + ph + 16.0
        );
        e += 1;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(x_label)
    );
    for (i, c) in curves.iter().enumerate() {
        let mut pts = vec![(sx(2f64.powf(lx0)), sy(0.0))];
        let mut prev = 0.0;
        for (&a, &o) in c.abscissae.iter().zip(&c.ordinates) {
            pts.push((sx(a), sy(prev)));
            pts.push((sx(a), sy(o)));
            prev = o;
        }
        pts.push((sx(2f64.powf(lx1)), sy(prev)));
        let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let col = color(i);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{col}" stroke-width="1.6" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&c.method)
        );
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{col}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&c.method)
        );
    }
    s.push_str("</svg>\n");
    s
}
