//! Minimal self-contained SVG line and heat-map plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log_x {
            (v.log10(), self.x.0.log10(), self.x.1.log10())
        } else {
            (v, self.x.0, self.x.1)
        };
        LEFT + (v - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    fn ty(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn axes(out: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let x0 = LEFT;
    let x1 = WIDTH - RIGHT;
    let y0 = HEIGHT - BOTTOM;
    let y1 = TOP;
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=4 {
        let fr = i as f64 / 4.0;
        let xv = if f.log_x {
            10f64.powf(f.x.0.log10() + fr * (f.x.1.log10() - f.x.0.log10()))
        } else {
            f.x.0 + fr * (f.x.1 - f.x.0)
        };
        let yv = f.y.0 + fr * (f.y.1 - f.y.0);
        let px = f.tx(xv);
        let py = f.ty(yv);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn open(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Line plot; non-finite points break the line.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_x: bool) -> String {
    let xs = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| y.is_finite() && (!log_x || *x > 0.0))
        .map(|(x, _)| *x);
    let ys = series.iter().flat_map(|s| s.points.iter()).map(|(_, y)| *y);
    let mut out = String::new();
    open(&mut out);
    let (Some(x), Some(y)) = (finite_range(xs), finite_range(ys)) else {
        let _ = writeln!(out, r#"<text x="20" y="40">{}: no finite data</text>"#, escape(title));
        out.push_str("</svg>\n");
        return out;
    };
    let f = Frame { x, y, log_x };
    axes(&mut out, title, xlabel, ylabel, &f);
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, out: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(px, py) in &s.points {
            if px.is_finite() && py.is_finite() && (!log_x || px > 0.0) {
                segment.push(format!("{:.2},{:.2}", f.tx(px), f.ty(py)));
            } else {
                flush(&mut segment, &mut out);
            }
        }
        flush(&mut segment, &mut out);
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn colour(v: f64) -> String {
    // dark blue to yellow
    let t = v.clamp(0.0, 1.0);
    let r = (68.0 + t * (253.0 - 68.0)).round() as u8;
    let g = (1.0 + t * (231.0 - 1.0)).round() as u8;
    let b = (84.0 + t * (37.0 - 84.0)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of `z[iy][ix]` over the grid `xs` by `ys`; non-finite cells are grey.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64], z: &[Vec<f64>]) -> String {
    let mut out = String::new();
    open(&mut out);
    let zr = finite_range(z.iter().flatten().copied());
    let (Some(x), Some(y), Some(zr)) = (finite_range(xs.iter().copied()), finite_range(ys.iter().copied()), zr) else {
        let _ = writeln!(out, r#"<text x="20" y="40">{}: no finite data</text>"#, escape(title));
        out.push_str("</svg>\n");
        return out;
    };
    let f = Frame { x, y, log_x: false };
    let cw = (WIDTH - LEFT - RIGHT) / xs.len().max(1) as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / ys.len().max(1) as f64;
    for (iy, row) in z.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                colour((v - zr.0) / (zr.1 - zr.0))
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                LEFT + ix as f64 * cw,
                HEIGHT - BOTTOM - (iy + 1) as f64 * ch,
                cw + 0.3,
                ch + 0.3
            );
        }
    }
    axes(&mut out, title, xlabel, ylabel, &f);
    let bx = WIDTH - RIGHT + 20.0;
    for i in 0..20 {
        let t = i as f64 / 19.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            HEIGHT - BOTTOM - (i + 1) as f64 * (HEIGHT - TOP - BOTTOM) / 20.0,
            (HEIGHT - TOP - BOTTOM) / 20.0 + 0.3,
            colour(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{:.2}" font-size="11">{}</text><text x="{}" y="{:.2}" font-size="11">{}</text>"#,
        bx + 20.0,
        HEIGHT - BOTTOM,
        tick_label(zr.0),
        bx + 20.0,
        TOP + 10.0,
        tick_label(zr.1)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = Series::new("a<b", vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0), (3.0, 2.0)]);
        let svg = line_plot("t", "x", "y", &[s], false);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let empty = line_plot("t", "x", "y", &[Series::new("e", vec![(0.0, f64::NAN)])], true);
        assert!(empty.contains("no finite data"));
    }

    #[test]
    fn heat_map_has_one_cell_per_value() {
        let z = vec![vec![0.0, 1.0, f64::NAN], vec![2.0, 3.0, 4.0]];
        let svg = heat_map("t", "x", "y", &[0.0, 1.0, 2.0], &[0.0, 1.0], &z);
        assert_eq!(svg.matches("#bbbbbb").count(), 1);
        assert_eq!(svg, heat_map("t", "x", "y", &[0.0, 1.0, 2.0], &[0.0, 1.0], &z));
    }
}
