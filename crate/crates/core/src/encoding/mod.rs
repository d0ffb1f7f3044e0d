//! Binding time series to layout cells: ribbon orderings, value filters,
//! palette colors, SVG rendering and the viewer document.

mod export;
mod palette;
mod render;

pub use export::{export_lens, import_lens, CellRecord, LensDocument, VIEWER_SCHEMA_VERSION};
pub use palette::{Palette, Rgb, StopPosition};
pub use render::{glyphs, render_svg, two_tone_bands, Glyph, SvgStyle};

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LensError, Result};
use crate::ribbon::RibbonLayout;

/// Values of one facade over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSeries {
    pub facade_id: String,
    pub values: Vec<f64>,
    pub time_labels: Vec<String>,
    /// Whether the last time step is followed by the first (e.g. seasons).
    pub cyclic: bool,
}

impl TemporalSeries {
    pub fn new(
        facade_id: impl Into<String>,
        values: Vec<f64>,
        time_labels: Vec<String>,
        cyclic: bool,
    ) -> Result<Self> {
        let facade_id = facade_id.into();
        if values.len() != time_labels.len() {
            return Err(LensError::Binding(format!(
                "facade {facade_id}: {} values but {} time labels",
                values.len(),
                time_labels.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LensError::Binding(format!(
                "facade {facade_id}: value at time {i} is not finite"
            )));
        }
        Ok(TemporalSeries {
            facade_id,
            values,
            time_labels,
            cyclic,
        })
    }

    /// Series with labels `t0`, `t1`, ...
    pub fn unlabeled(facade_id: impl Into<String>, values: Vec<f64>, cyclic: bool) -> Result<Self> {
        let labels = (0..values.len()).map(|i| format!("t{i}")).collect();
        TemporalSeries::new(facade_id, values, labels, cyclic)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Reduction over facades used to rank time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Mean,
    Max,
    Min,
}

impl Reduction {
    fn apply(&self, xs: impl Iterator<Item = f64>) -> f64 {
        match self {
            Reduction::Mean => {
                let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
                if n == 0 {
                    0.0
                } else {
                    s / n as f64
                }
            }
            Reduction::Max => xs.fold(f64::NEG_INFINITY, f64::max),
            Reduction::Min => xs.fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKey {
    Chronological,
    Attribute(Reduction),
}

/// Base order of time steps plus a cyclic shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub key: OrderKey,
    pub shift: usize,
}

impl Default for Ordering {
    fn default() -> Self {
        Ordering {
            key: OrderKey::Chronological,
            shift: 0,
        }
    }
}

/// A requested change of ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    Chronological,
    Attribute(Reduction),
    /// Rotate the current order by k slots.
    Wrap(usize),
}

impl FromStr for OrderMode {
    type Err = LensError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            LensError::InvalidInput(format!(
                "unknown ordering '{s}' (chrono, attribute:mean|max|min, wrap:K)"
            ))
        };
        match s.split_once(':') {
            None if s == "chrono" || s == "chronological" => Ok(OrderMode::Chronological),
            Some(("attribute", r)) => Ok(OrderMode::Attribute(match r {
                "mean" => Reduction::Mean,
                "max" => Reduction::Max,
                "min" => Reduction::Min,
                _ => return Err(bad()),
            })),
            Some(("wrap", k)) => k.parse().map(OrderMode::Wrap).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueFilter {
    pub lo: f64,
    pub hi: f64,
    /// Saturation kept by cells outside [lo, hi].
    pub prominence: f64,
}

impl ValueFilter {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

impl FromStr for ValueFilter {
    type Err = LensError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || LensError::InvalidInput(format!("filter '{s}' is not LO:HI:P"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        Ok(ValueFilter {
            lo: v[0],
            hi: v[1],
            prominence: v[2],
        })
    }
}

/// Which end of the ribbon stack holds the first time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDirection {
    #[default]
    InnerEarliest,
    OuterEarliest,
}

impl FromStr for TimeDirection {
    type Err = LensError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner-earliest" => Ok(TimeDirection::InnerEarliest),
            "outer-earliest" => Ok(TimeDirection::OuterEarliest),
            _ => Err(LensError::InvalidInput(format!(
                "time direction '{s}' is not inner-earliest or outer-earliest"
            ))),
        }
    }
}

/// A layout with bound series and display state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedLens {
    pub layout: RibbonLayout,
    /// One series per layout facade, in layout facade order.
    pub series: Vec<TemporalSeries>,
    pub ordering: Ordering,
    pub filter: Option<ValueFilter>,
    pub palette: Palette,
    pub two_tone: bool,
    pub glyphs: bool,
    pub time_direction: TimeDirection,
}

/// Value and color resolved for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellValue {
    pub ribbon: usize,
    pub facade: String,
    pub time: usize,
    pub value: f64,
    pub color: Rgb,
    pub dimmed: bool,
}

/// Attaches one series per facade; the default state is chronological, inner-earliest.
pub fn bind_series(layout: RibbonLayout, series: Vec<TemporalSeries>) -> Result<EncodedLens> {
    let n = layout.ribbon_count();
    let mut by_id: BTreeMap<String, TemporalSeries> = BTreeMap::new();
    for s in series {
        if by_id.contains_key(&s.facade_id) {
            return Err(LensError::Binding(format!(
                "duplicate series for facade {}",
                s.facade_id
            )));
        }
        by_id.insert(s.facade_id.clone(), s);
    }
    let missing: Vec<&str> = layout
        .facades
        .iter()
        .filter(|f| !by_id.contains_key(*f))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(LensError::Binding(format!(
            "no series for facades: {}",
            missing.join(", ")
        )));
    }
    let unknown: Vec<&str> = by_id
        .keys()
        .filter(|k| !layout.facades.contains(k))
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        return Err(LensError::Binding(format!(
            "series for unknown facades: {}",
            unknown.join(", ")
        )));
    }
    let wrong: Vec<String> = layout
        .facades
        .iter()
        .filter(|f| by_id[*f].len() != n)
        .map(|f| format!("{f} ({})", by_id[f].len()))
        .collect();
    if !wrong.is_empty() {
        return Err(LensError::Binding(format!(
            "series lengths differ from the ribbon count {n}: {}",
            wrong.join(", ")
        )));
    }
    let series = layout
        .facades
        .iter()
        .map(|f| by_id.remove(f).unwrap())
        .collect();
    Ok(EncodedLens {
        layout,
        series,
        ordering: Ordering::default(),
        filter: None,
        palette: Palette::default(),
        two_tone: false,
        glyphs: false,
        time_direction: TimeDirection::default(),
    })
}

impl EncodedLens {
    pub fn ribbon_count(&self) -> usize {
        self.layout.ribbon_count()
    }

    pub fn is_cyclic(&self) -> bool {
        self.series.iter().all(|s| s.cyclic)
    }

    /// Time steps in slot order before the shift.
    pub fn base_order(&self) -> Vec<usize> {
        let n = self.ribbon_count();
        let mut order: Vec<usize> = (0..n).collect();
        if let OrderKey::Attribute(red) = self.ordering.key {
            let key: Vec<f64> = (0..n)
                .map(|t| red.apply(self.series.iter().map(|s| s.values[t])))
                .collect();
            order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
        }
        order
    }

    /// Time step shown in each slot; slot 0 is the earliest end of the stack.
    pub fn permutation(&self) -> Vec<usize> {
        let base = self.base_order();
        let n = base.len();
        (0..n)
            .map(|s| base[(s + self.ordering.shift) % n])
            .collect()
    }

    fn slot_of_ribbon(&self, r: usize) -> usize {
        match self.time_direction {
            TimeDirection::InnerEarliest => self.ribbon_count() - 1 - r,
            TimeDirection::OuterEarliest => r,
        }
    }

    /// Time step displayed by ribbon `r` (0 = outermost).
    pub fn time_of(&self, r: usize) -> usize {
        self.permutation()[self.slot_of_ribbon(r)]
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.series
            .iter()
            .flat_map(|s| &s.values)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Normalized position of a value in the lens range.
    pub fn normalize(&self, v: f64) -> f64 {
        let (lo, hi) = self.value_range();
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn is_dimmed(&self, v: f64) -> bool {
        self.filter.is_some_and(|f| !f.contains(v))
    }

    /// Applies the filter to a palette color.
    pub fn modulate(&self, c: Rgb, v: f64) -> Rgb {
        match self.filter {
            Some(f) if !f.contains(v) => c.desaturate(f.prominence),
            _ => c,
        }
    }

    pub fn color_of(&self, v: f64) -> Rgb {
        self.modulate(self.palette.color(self.normalize(v)), v)
    }

    pub fn cell_value(&self, ribbon: usize, facade: &str) -> Option<f64> {
        let f = self.layout.facades.iter().position(|x| x == facade)?;
        (ribbon < self.ribbon_count()).then(|| self.series[f].values[self.time_of(ribbon)])
    }

    /// Values and colors of every layout cell, in layout order.
    pub fn cell_values(&self) -> Vec<CellValue> {
        let perm = self.permutation();
        let index: BTreeMap<&str, usize> = self
            .layout
            .facades
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        self.layout
            .cells
            .iter()
            .map(|c| {
                let time = perm[self.slot_of_ribbon(c.ribbon)];
                let value = self.series[index[c.facade.as_str()]].values[time];
                CellValue {
                    ribbon: c.ribbon,
                    facade: c.facade.clone(),
                    time,
                    value,
                    color: self.color_of(value),
                    dimmed: self.is_dimmed(value),
                }
            })
            .collect()
    }
}

/// Changes the ribbon ordering. Wrapping composes with the current shift;
/// the other modes reset it.
pub fn reorder(lens: &EncodedLens, mode: OrderMode) -> Result<EncodedLens> {
    let mut out = lens.clone();
    let n = lens.ribbon_count().max(1);
    out.ordering = match mode {
        OrderMode::Chronological => Ordering::default(),
        OrderMode::Attribute(r) => Ordering {
            key: OrderKey::Attribute(r),
            shift: 0,
        },
        OrderMode::Wrap(k) => {
            if !lens.is_cyclic() {
                let linear: Vec<&str> = lens
                    .series
                    .iter()
                    .filter(|s| !s.cyclic)
                    .map(|s| s.facade_id.as_str())
                    .collect();
                return Err(LensError::InvalidInput(format!(
                    "wrapped ordering joins the last time step to the first, which needs cyclic data; \
                     series not marked cyclic: {}",
                    linear.join(", ")
                )));
            }
            Ordering {
                key: lens.ordering.key,
                shift: (lens.ordering.shift + k) % n,
            }
        }
    };
    Ok(out)
}

/// Dims cells whose value lies outside [lo, hi]; values are left untouched.
pub fn filter_values(lens: &EncodedLens, lo: f64, hi: f64, prominence: f64) -> Result<EncodedLens> {
    if !(lo <= hi) {
        return Err(LensError::InvalidInput(format!(
            "filter range [{lo}, {hi}] is inverted"
        )));
    }
    if !(0.0..=1.0).contains(&prominence) {
        return Err(LensError::InvalidInput(format!(
            "prominence {prominence} is outside [0, 1]"
        )));
    }
    let mut out = lens.clone();
    out.filter = Some(ValueFilter { lo, hi, prominence });
    Ok(out)
}
