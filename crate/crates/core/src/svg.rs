use std::fmt::Write;

use crate::geometry::{BBox, Point};

/// Fixed three-decimal formatting without negative zero.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// World-to-SVG transform with y pointing up in world space.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub min: Point,
    pub max: Point,
    pub scale: f64,
    pub margin: f64,
}

impl Frame {
    pub fn fit(points: &[Point], width: f64, margin: f64) -> Frame {
        let b = BBox::of(points);
        let span = b.width().max(b.height()).max(f64::MIN_POSITIVE);
        Frame {
            min: b.min,
            max: b.max,
            scale: (width - 2.0 * margin) / span,
            margin,
        }
    }

    pub fn width(&self) -> f64 {
        (self.max.x - self.min.x) * self.scale + 2.0 * self.margin
    }

    pub fn height(&self) -> f64 {
        (self.max.y - self.min.y) * self.scale + 2.0 * self.margin
    }

    pub fn map(&self, p: Point) -> (f64, f64) {
        (
            self.margin + (p.x - self.min.x) * self.scale,
            self.margin + (self.max.y - p.y) * self.scale,
        )
    }

    fn pts(&self, pts: &[Point], out: &mut String) {
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(
                out,
                "{}{} {}",
                if i == 0 { "M" } else { " L" },
                num(x),
                num(y)
            );
        }
    }

    /// Path data of one or more closed rings.
    pub fn rings(&self, rings: &[Vec<Point>]) -> String {
        let mut s = String::new();
        for r in rings.iter().filter(|r| !r.is_empty()) {
            if !s.is_empty() {
                s.push(' ');
            }
            self.pts(r, &mut s);
            s.push_str(" Z");
        }
        s
    }

    pub fn polyline(&self, pts: &[Point]) -> String {
        let mut s = String::new();
        self.pts(pts, &mut s);
        s
    }

    pub fn header(&self) -> String {
        let (w, h) = (num(self.width()), num(self.height()));
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n")
    }
}
