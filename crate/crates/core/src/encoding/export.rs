use serde::{Deserialize, Serialize};

use super::{EncodedLens, Ordering, Palette, TemporalSeries, TimeDirection, ValueFilter};
use crate::error::{LensError, Result};
use crate::geometry::Point;
use crate::ribbon::{Cell, RibbonLayout};

pub const VIEWER_SCHEMA_VERSION: u32 = 1;

/// Cell geometry with its bound value and display color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub ribbon: usize,
    pub facade: String,
    pub polygon: Vec<Vec<Point>>,
    #[serde(default)]
    pub outer_len: Vec<usize>,
    pub time: usize,
    pub time_label: String,
    pub value: f64,
    pub color: String,
    pub dimmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingState {
    #[serde(flatten)]
    pub ordering: Ordering,
    /// Time step per slot, earliest slot first.
    pub permutation: Vec<usize>,
    /// Time step per ribbon, outermost first.
    pub ribbon_times: Vec<usize>,
}

/// Document read by the viewer. Cell geometry lives in `cells`; the embedded
/// layout carries everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensDocument {
    pub schema_version: u32,
    pub layout: RibbonLayout,
    pub cells: Vec<CellRecord>,
    pub series: Vec<TemporalSeries>,
    pub ordering: OrderingState,
    pub filter: Option<ValueFilter>,
    pub palette: Palette,
    pub palette_stops: Vec<String>,
    pub value_range: [f64; 2],
    pub two_tone: bool,
    pub glyphs: bool,
    pub time_direction: TimeDirection,
}

impl LensDocument {
    pub fn from_lens(lens: &EncodedLens) -> LensDocument {
        let mut layout = lens.layout.clone();
        let cells = std::mem::take(&mut layout.cells)
            .into_iter()
            .zip(lens.cell_values())
            .map(|(c, v)| CellRecord {
                ribbon: c.ribbon,
                facade: c.facade,
                polygon: c.polygon,
                outer_len: c.outer_len,
                time: v.time,
                time_label: lens
                    .series
                    .first()
                    .and_then(|s| s.time_labels.get(v.time))
                    .cloned()
                    .unwrap_or_default(),
                value: v.value,
                color: v.color.hex(),
                dimmed: v.dimmed,
            })
            .collect();
        let (lo, hi) = lens.value_range();
        LensDocument {
            schema_version: VIEWER_SCHEMA_VERSION,
            layout,
            cells,
            series: lens.series.clone(),
            ordering: OrderingState {
                ordering: lens.ordering,
                permutation: lens.permutation(),
                ribbon_times: (0..lens.ribbon_count()).map(|r| lens.time_of(r)).collect(),
            },
            filter: lens.filter,
            palette: lens.palette,
            palette_stops: lens.palette.stops().iter().map(|c| c.hex()).collect(),
            value_range: [lo, hi],
            two_tone: lens.two_tone,
            glyphs: lens.glyphs,
            time_direction: lens.time_direction,
        }
    }

    pub fn into_lens(self) -> Result<EncodedLens> {
        if self.schema_version != VIEWER_SCHEMA_VERSION {
            return Err(LensError::InvalidInput(format!(
                "unsupported viewer schema version {}",
                self.schema_version
            )));
        }
        let mut layout = self.layout;
        layout.cells = self
            .cells
            .into_iter()
            .map(|c| Cell {
                ribbon: c.ribbon,
                facade: c.facade,
                polygon: c.polygon,
                outer_len: c.outer_len,
            })
            .collect();
        Ok(EncodedLens {
            layout,
            series: self.series,
            ordering: self.ordering.ordering,
            filter: self.filter,
            palette: self.palette,
            two_tone: self.two_tone,
            glyphs: self.glyphs,
            time_direction: self.time_direction,
        })
    }
}

/// Viewer JSON for a lens.
pub fn export_lens(lens: &EncodedLens) -> Result<String> {
    Ok(serde_json::to_string_pretty(&LensDocument::from_lens(
        lens,
    ))?)
}

pub fn import_lens(json: &str) -> Result<EncodedLens> {
    let doc: LensDocument = serde_json::from_str(json)?;
    doc.into_lens()
}
