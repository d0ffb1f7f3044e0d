use std::fmt::Write;

use super::{EncodedLens, TimeDirection};
use crate::geometry::Point;
use crate::ribbon::Cell;
use crate::svg::{num, Frame};

/// Where along each sector curve a glyph sits, as a share of its length.
const GLYPH_POSITION: f64 = 0.6;
const LEGEND_HEIGHT: f64 = 48.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub margin: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 800.0,
            margin: 20.0,
        }
    }
}

/// An arrow on a sector curve pointing from earlier to later ribbons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Glyph {
    pub anchor: Point,
    /// Unit tangent in world coordinates.
    pub direction: Point,
}

fn point_at_length(curve: &[Point], share: f64) -> Option<(Point, Point)> {
    let lens: Vec<f64> = curve.windows(2).map(|w| w[0].dist(w[1])).collect();
    let total: f64 = lens.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut left = share * total;
    for (i, &l) in lens.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        if left <= l || i + 1 == lens.len() {
            let t = (left / l).clamp(0.0, 1.0);
            let d = curve[i + 1] - curve[i];
            return Some((curve[i].lerp(curve[i + 1], t), d * (1.0 / l)));
        }
        left -= l;
    }
    None
}

/// One glyph per distinct sector curve.
pub fn glyphs(lens: &EncodedLens) -> Vec<Glyph> {
    let outward = lens.time_direction == TimeDirection::InnerEarliest;
    lens.layout
        .sector_boundaries()
        .into_iter()
        .filter_map(|c| point_at_length(c, GLYPH_POSITION))
        .map(|(anchor, t)| Glyph {
            anchor,
            direction: if outward { t } else { t * -1.0 },
        })
        .collect()
}

fn resample(chain: &[Point], m: usize) -> Vec<Point> {
    if chain.len() < 2 {
        return vec![chain.first().copied().unwrap_or(Point::new(0.0, 0.0)); m];
    }
    let mut acc = vec![0.0];
    for w in chain.windows(2) {
        acc.push(acc.last().unwrap() + w[0].dist(w[1]));
    }
    let total = *acc.last().unwrap();
    if total == 0.0 {
        return vec![chain[0]; m];
    }
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    for j in 0..m {
        let s = total * j as f64 / (m - 1) as f64;
        while seg + 2 < acc.len() && acc[seg + 1] < s {
            seg += 1;
        }
        let l = acc[seg + 1] - acc[seg];
        let t = if l > 0.0 {
            ((s - acc[seg]) / l).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(chain[seg].lerp(chain[seg + 1], t));
    }
    out
}

/// Splits a cell into an outer band holding `1 − fraction` of its width and
/// an inner band holding `fraction`.
pub fn two_tone_bands(cell: &Cell, fraction: f64) -> (Vec<Vec<Point>>, Vec<Vec<Point>>) {
    let s = 1.0 - fraction.clamp(0.0, 1.0);
    let mut outer_rings = Vec::new();
    let mut inner_rings = Vec::new();
    for (i, ring) in cell.polygon.iter().enumerate() {
        let n = cell
            .outer_len
            .get(i)
            .copied()
            .unwrap_or(ring.len() / 2)
            .min(ring.len());
        let outer = &ring[..n];
        let inner: Vec<Point> = ring[n..].iter().rev().copied().collect();
        let m = outer.len().max(inner.len()).max(2);
        let (o, inn) = (resample(outer, m), resample(&inner, m));
        let mid: Vec<Point> = o.iter().zip(&inn).map(|(a, b)| a.lerp(*b, s)).collect();
        outer_rings.push(o.iter().chain(mid.iter().rev()).copied().collect());
        inner_rings.push(mid.iter().chain(inn.iter().rev()).copied().collect());
    }
    (outer_rings, inner_rings)
}

fn attr_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders the lens: one path per cell (two in two-tone mode), the core,
/// optional glyphs and a palette legend.
pub fn render_svg(lens: &EncodedLens, style: &SvgStyle) -> String {
    let layout = &lens.layout;
    let f = Frame::fit(&layout.footprint, style.width, style.margin);
    let (w, h) = (f.width(), f.height() + LEGEND_HEIGHT);
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(w),
        num(h),
        num(w),
        num(h)
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n<g id=\"cells\" stroke=\"none\">\n");
    let stops = lens.palette.stops();
    for (cell, cv) in layout.cells.iter().zip(lens.cell_values()) {
        let fac = attr_escape(&cell.facade);
        if lens.two_tone {
            let pos = lens.palette.position(lens.normalize(cv.value));
            let low = lens.modulate(stops[pos.low], cv.value);
            let high = lens.modulate(stops[pos.high], cv.value);
            let (outer, inner) = two_tone_bands(cell, pos.fraction);
            for (rings, color, part) in [(outer, low, "low"), (inner, high, "high")] {
                let share = if part == "low" {
                    1.0 - pos.fraction
                } else {
                    pos.fraction
                };
                if share <= 0.0 {
                    continue;
                }
                let _ = writeln!(
                    s,
                    "<path class=\"cell\" data-ribbon=\"{}\" data-facade=\"{fac}\" data-tone=\"{part}\" data-fraction=\"{}\" fill=\"{}\" fill-rule=\"evenodd\" d=\"{}\"/>",
                    cell.ribbon,
                    num(pos.fraction),
                    color.hex(),
                    f.rings(&rings)
                );
            }
        } else {
            let _ = writeln!(
                s,
                "<path class=\"cell\" data-ribbon=\"{}\" data-facade=\"{fac}\" fill=\"{}\" fill-rule=\"evenodd\" d=\"{}\"/>",
                cell.ribbon,
                cv.color.hex(),
                f.rings(&cell.polygon)
            );
        }
    }
    s.push_str("</g>\n");
    for ring in &layout.core {
        let _ = writeln!(
            s,
            "<polygon class=\"core\" fill=\"#f2f2f2\" stroke=\"none\" points=\"{}\"/>",
            points_attr(&f, ring)
        );
    }
    let _ = writeln!(
        s,
        "<polygon class=\"footprint\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\" points=\"{}\"/>",
        points_attr(&f, &layout.footprint)
    );
    if lens.glyphs {
        s.push_str("<g id=\"glyphs\" fill=\"#111111\">\n");
        for g in glyphs(lens) {
            let (ax, ay) = f.map(g.anchor);
            // Screen space has y pointing down.
            let (dx, dy) = (g.direction.x, -g.direction.y);
            let size = 7.0;
            let tip = (ax + dx * size, ay + dy * size);
            let l = (
                ax - dx * size * 0.5 - dy * size * 0.5,
                ay - dy * size * 0.5 + dx * size * 0.5,
            );
            let r = (
                ax - dx * size * 0.5 + dy * size * 0.5,
                ay - dy * size * 0.5 - dx * size * 0.5,
            );
            let _ = writeln!(
                s,
                "<polygon class=\"glyph\" data-anchor=\"{} {}\" points=\"{},{} {},{} {},{}\"/>",
                num(ax),
                num(ay),
                num(tip.0),
                num(tip.1),
                num(l.0),
                num(l.1),
                num(r.0),
                num(r.1)
            );
        }
        s.push_str("</g>\n");
    }
    // Legend: one swatch per palette stop, labeled with the value range.
    let (lo, hi) = lens.value_range();
    let top = f.height() + 8.0;
    let sw = ((w - 2.0 * style.margin) / stops.len() as f64).min(60.0);
    s.push_str("<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (i, c) in stops.iter().enumerate() {
        let x = style.margin + i as f64 * sw;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"14\" fill=\"{}\"/>",
            num(x),
            num(top),
            num(sw),
            c.hex()
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\">{}</text>",
        num(style.margin),
        num(top + 28.0),
        num(lo)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        num(style.margin + stops.len() as f64 * sw),
        num(top + 28.0),
        num(hi)
    );
    s.push_str("</g>\n</svg>\n");
    s
}

fn points_attr(f: &Frame, ring: &[Point]) -> String {
    ring.iter()
        .map(|&p| {
            let (x, y) = f.map(p);
            format!("{},{}", num(x), num(y))
        })
        .collect::<Vec<_>>()
        .join(" ")
}
