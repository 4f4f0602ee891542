//! Minimal SVG scatter plots: fixed 480×480 panels, points as small
//! circles, data-range ticks (min and max) on both axes.

use std::fmt::Write;

use ppics_core::Matrix;

pub const PANEL: f64 = 480.0;
const GAP: f64 = 16.0;
const MARGIN: f64 = 48.0;
const PAD: f64 = 12.0;
const RADIUS: f64 = 2.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        PAD + (v - lo) / (hi - lo) * (PANEL - 2.0 * PAD)
    } else {
        PANEL / 2.0
    }
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

/// One panel group at `(left, top)` plotting `xs` against `ys`.
fn panel(out: &mut String, left: f64, top: f64, xs: &[f64], ys: &[f64], attrs: &str) {
    let (rx, ry) = (range(xs), range(ys));
    let _ = writeln!(
        out,
        r#"<g class="panel" {attrs} transform="translate({left},{top})">"#
    );
    let _ = writeln!(
        out,
        r##"<rect width="{PANEL}" height="{PANEL}" fill="none" stroke="#888"/>"##
    );
    out.push_str("<g class=\"points\" fill=\"#1f4e79\">\n");
    for (&x, &y) in xs.iter().zip(ys) {
        let cx = scale(x, rx);
        let cy = PANEL - scale(y, ry);
        let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{RADIUS}"/>"#);
    }
    out.push_str("</g>\n<g class=\"ticks\" font-size=\"10\" stroke=\"#444\">\n");
    for (v, anchor) in [(rx.0, "start"), (rx.1, "end")] {
        let x = scale(v, rx);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{PANEL}" x2="{x:.1}" y2="{}"/><text x="{x:.1}" y="{}" text-anchor="{anchor}" stroke="none">{}</text>"#,
            PANEL + 4.0,
            PANEL + 14.0,
            tick(v)
        );
    }
    for (v, baseline) in [(ry.0, "auto"), (ry.1, "hanging")] {
        let y = PANEL - scale(v, ry);
        let _ = writeln!(
            out,
            r#"<line x1="0" y1="{y:.1}" x2="-4" y2="{y:.1}"/><text x="-6" y="{y:.1}" text-anchor="end" dominant-baseline="{baseline}" stroke="none">{}</text>"#,
            tick(v)
        );
    }
    out.push_str("</g>\n</g>\n");
}

fn document(width: f64, height: f64, title: &str, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n\
         <title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
        escape(title)
    )
}

/// Lower triangle of the scatter-plot matrix of the columns of `data`:
/// panel `(r, c)`, `r > c`, plots column `c` horizontally against column
/// `r`. There are `p(p − 1)/2` panel groups.
pub fn splom(data: &Matrix, names: &[String], title: &str) -> String {
    let p = data.ncols();
    assert_eq!(names.len(), p, "one name per column");
    let cols: Vec<Vec<f64>> = (0..p).map(|j| data.column(j)).collect();
    let cells = p.saturating_sub(1) as f64;
    let size = 2.0 * MARGIN + cells * PANEL + (cells - 1.0).max(0.0) * GAP;
    let mut body = String::new();
    for r in 1..p {
        for c in 0..r {
            let left = MARGIN + c as f64 * (PANEL + GAP);
            let top = MARGIN + (r - 1) as f64 * (PANEL + GAP);
            let attrs = format!(
                r#"data-x="{}" data-y="{}""#,
                escape(&names[c]),
                escape(&names[r])
            );
            panel(&mut body, left, top, &cols[c], &cols[r], &attrs);
        }
    }
    body.push_str("<g class=\"labels\" font-size=\"14\" text-anchor=\"middle\">\n");
    for (c, name) in names.iter().enumerate().take(p.saturating_sub(1)) {
        let x = MARGIN + c as f64 * (PANEL + GAP) + PANEL / 2.0;
        let _ = writeln!(
            body,
            r#"<text x="{x}" y="{}">{}</text>"#,
            size - 8.0,
            escape(name)
        );
    }
    for (r, name) in names.iter().enumerate().skip(1) {
        let y = MARGIN + (r - 1) as f64 * (PANEL + GAP) + PANEL / 2.0;
        let _ = writeln!(
            body,
            r#"<text x="14" y="{y}" transform="rotate(-90 14 {y})">{}</text>"#,
            escape(name)
        );
    }
    body.push_str("</g>\n");
    document(size, size, title, &body)
}

/// A single panel plotting `xs` against `ys`.
pub fn scatter(xs: &[f64], ys: &[f64], x_name: &str, y_name: &str, title: &str) -> String {
    let size = PANEL + 2.0 * MARGIN;
    let mut body = String::new();
    let attrs = format!(r#"data-x="{}" data-y="{}""#, escape(x_name), escape(y_name));
    panel(&mut body, MARGIN, MARGIN, xs, ys, &attrs);
    let _ = writeln!(
        body,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        size / 2.0,
        size - 8.0,
        escape(x_name)
    );
    let mid = size / 2.0;
    let _ = writeln!(
        body,
        r#"<text x="14" y="{mid}" font-size="14" text-anchor="middle" transform="rotate(-90 14 {mid})">{}</text>"#,
        escape(y_name)
    );
    document(size, size, title, &body)
}
