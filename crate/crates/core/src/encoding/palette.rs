use serde::{Deserialize, Serialize};

/// An sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub fn hex(&self) -> String {
        let [r, g, b] = self.0;
        format!("#{r:02x}{g:02x}{b:02x}")
    }

    pub fn from_hex(s: &str) -> Option<Rgb> {
        let s = s.strip_prefix('#')?;
        if s.len() != 6 {
            return None;
        }
        let c = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).ok();
        Some(Rgb([c(0)?, c(2)?, c(4)?]))
    }

    fn to_f(self) -> [f64; 3] {
        self.0.map(|c| c as f64)
    }

    fn from_f(c: [f64; 3]) -> Rgb {
        Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8))
    }

    /// Rec. 709 luma.
    pub fn luma(&self) -> f64 {
        let [r, g, b] = self.to_f();
        0.2126 * r + 0.7152 * g + 0.0722 * b
    }

    /// Pulls the color toward its luma; `p` = 1 leaves it unchanged, 0 gives gray.
    pub fn desaturate(&self, p: f64) -> Rgb {
        let l = self.luma();
        Rgb::from_f(self.to_f().map(|c| l + p * (c - l)))
    }

    pub fn lerp(&self, o: Rgb, t: f64) -> Rgb {
        let (a, b) = (self.to_f(), o.to_f());
        Rgb::from_f([0, 1, 2].map(|i| a[i] + t * (b[i] - a[i])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Viridis,
}

const VIRIDIS: [Rgb; 7] = [
    Rgb([0x44, 0x01, 0x54]),
    Rgb([0x44, 0x39, 0x83]),
    Rgb([0x31, 0x68, 0x8e]),
    Rgb([0x21, 0x91, 0x8c]),
    Rgb([0x35, 0xb7, 0x79]),
    Rgb([0x90, 0xd7, 0x43]),
    Rgb([0xfd, 0xe7, 0x25]),
];

/// Position of a normalized value between two palette stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPosition {
    pub low: usize,
    pub high: usize,
    /// Share of the way from `low` to `high`, in [0, 1].
    pub fraction: f64,
}

impl Palette {
    pub fn stops(&self) -> &'static [Rgb] {
        match self {
            Palette::Viridis => &VIRIDIS,
        }
    }

    pub fn position(&self, t: f64) -> StopPosition {
        let segments = (self.stops().len() - 1) as f64;
        let x = t.clamp(0.0, 1.0) * segments;
        let low = (x.floor() as usize).min(self.stops().len() - 2);
        StopPosition {
            low,
            high: low + 1,
            fraction: (x - low as f64).clamp(0.0, 1.0),
        }
    }

    /// Continuous color for a normalized value.
    pub fn color(&self, t: f64) -> Rgb {
        let p = self.position(t);
        let s = self.stops();
        s[p.low].lerp(s[p.high], p.fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_hit_stops() {
        let p = Palette::Viridis;
        assert_eq!(p.color(0.0), VIRIDIS[0]);
        assert_eq!(p.color(1.0), VIRIDIS[6]);
        assert_eq!(p.color(0.5), VIRIDIS[3]);
    }

    #[test]
    fn hex_round_trip() {
        for c in VIRIDIS {
            assert_eq!(Rgb::from_hex(&c.hex()), Some(c));
        }
    }

    #[test]
    fn full_prominence_keeps_color() {
        for c in VIRIDIS {
            assert_eq!(c.desaturate(1.0), c);
            let g = c.desaturate(0.0).0;
            assert!(g[0].abs_diff(g[1]) <= 1 && g[1].abs_diff(g[2]) <= 1);
        }
    }
}
