use std::fmt::Write;

/// Data for one SVG: `(x, u)`, `(x, m)` and the label diagnostic `(ξ, X_ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    pub labels: Vec<f64>,
    pub xxi: Vec<f64>,
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 240.0;
const PAD: f64 = 20.0;

/// Three side-by-side line plots in a fixed 900×280 viewport.
pub fn emit_svg(frame: &Frame) -> String {
    let width = 3.0 * PANEL_W;
    let height = PANEL_H + 2.0 * PAD;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="14" font-family="monospace" font-size="12">t = {:.6e}</text>"#,
        frame.t
    );
    let panels = [
        ("u", "x", &frame.x, &frame.u),
        ("m", "x", &frame.x, &frame.m),
        ("xxi", "label", &frame.labels, &frame.xxi),
    ];
    for (k, (name, axis, xs, ys)) in panels.iter().enumerate() {
        let left = k as f64 * PANEL_W;
        let _ = writeln!(out, r#"<g class="panel-{name}" transform="translate({left},{PAD})">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{PAD}" y="0" width="{}" height="{PANEL_H}" fill="none" stroke="#999"/>"##,
            PANEL_W - 2.0 * PAD
        );
        let _ = writeln!(
            out,
            r#"<text x="{PAD}" y="{}" font-family="monospace" font-size="11">{name} vs {axis}</text>"#,
            PANEL_H - 4.0
        );
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="#1f4e99" stroke-width="1" points="{}"/>"##,
            points(xs, ys)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn range(v: &[f64]) -> (f64, f64) {
    let finite = v.iter().filter(|a| a.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = finite.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn points(xs: &[f64], ys: &[f64]) -> String {
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let w = PANEL_W - 4.0 * PAD;
    let h = PANEL_H - 2.0 * PAD;
    let mut s = String::new();
    for (x, y) in xs.iter().zip(ys) {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let px = 2.0 * PAD + (x - x0) / (x1 - x0) * w;
        let py = PAD + (1.0 - (y - y0) / (y1 - y0)) * h;
        if !s.is_empty() {
            s.push(' ');
        }
        let _ = write!(s, "{px:.2},{py:.2}");
    }
    s
}
