//! End-to-end run: footprint and data files in, layout, lens and report out.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    bind_series, export_lens, filter_values, render_svg, reorder, EncodedLens, OrderMode, SvgStyle,
    TimeDirection, ValueFilter,
};
use crate::error::{ErrorClass, LensError, Result};
use crate::geometry::{distance_field, rasterize, FootprintPolygon};
use crate::io::{read_footprint, read_series_csv, read_text, Projection};
use crate::partition::{
    compute_cutlines_with, partition_with, to_dot, to_geojson, PartitionParams,
};
use crate::ribbon::{assemble_layout, layout_svg, LayoutParams, LayoutStats, RibbonLayout};
use crate::scmap::{solve_parameters_with, DiskMap, ScParams};
use crate::skeleton::{extract_signature, skeletonize_polygon, SignatureParams, SkeletonImage};

pub const REPORT_FILE: &str = "report.json";
pub const LAYOUT_FILE: &str = "layout.json";
pub const LENS_FILE: &str = "lens.json";
pub const SVG_FILE: &str = "lens.svg";
pub const CACHE_FILE: &str = "cache/disk_maps.json";

/// Everything a run needs. Loadable from TOML; unset keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub footprint: PathBuf,
    pub data: Option<PathBuf>,
    pub facades: Option<PathBuf>,
    pub projection: Projection,
    /// Marks every series as cyclic, enabling wrapped reordering.
    pub cyclic: bool,
    pub ribbons: usize,
    pub grid_res: usize,
    pub quad_order: usize,
    pub eps_level_cells: f64,
    pub eps_stitch_cells: f64,
    pub solver_tolerance: f64,
    /// `chrono`, `attribute:mean|max|min` or `wrap:K`.
    pub order: String,
    /// `LO:HI:P`.
    pub filter: Option<String>,
    pub two_tone: bool,
    pub glyphs: bool,
    pub time_direction: TimeDirection,
    pub svg_width: f64,
    pub out: PathBuf,
    pub debug_dumps: bool,
    pub use_cache: bool,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let layout = LayoutParams::default();
        PipelineConfig {
            footprint: PathBuf::new(),
            data: None,
            facades: None,
            projection: Projection::Auto,
            cyclic: false,
            ribbons: 4,
            grid_res: 512,
            quad_order: 8,
            eps_level_cells: layout.eps_level_cells,
            eps_stitch_cells: layout.eps_stitch_cells,
            solver_tolerance: ScParams::default().tolerance,
            order: "chrono".into(),
            filter: None,
            two_tone: false,
            glyphs: false,
            time_direction: TimeDirection::InnerEarliest,
            svg_width: SvgStyle::default().width,
            out: PathBuf::from("out"),
            debug_dumps: false,
            use_cache: false,
            threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            LensError::Parse {
                source_name: "config".into(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            LensError::Parse { line, message, .. } => LensError::Parse {
                source_name: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LensError::InvalidInput(m));
        if self.footprint.as_os_str().is_empty() {
            return bad("no footprint given".into());
        }
        if self.ribbons < 1 {
            return bad("ribbon count must be at least 1".into());
        }
        if self.grid_res < 32 {
            return bad(format!("grid resolution {} is below 32", self.grid_res));
        }
        if self.quad_order < 2 {
            return bad(format!("quadrature order {} is below 2", self.quad_order));
        }
        for (name, v) in [
            ("eps_level_cells", self.eps_level_cells),
            ("eps_stitch_cells", self.eps_stitch_cells),
            ("solver_tolerance", self.solver_tolerance),
            ("svg_width", self.svg_width),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1".into());
        }
        self.order_mode()?;
        self.value_filter()?;
        Ok(())
    }

    pub fn order_mode(&self) -> Result<OrderMode> {
        self.order.parse()
    }

    pub fn value_filter(&self) -> Result<Option<ValueFilter>> {
        self.filter.as_deref().map(str::parse).transpose()
    }

    pub fn layout_params(&self) -> LayoutParams {
        LayoutParams {
            eps_level_cells: self.eps_level_cells,
            eps_stitch_cells: self.eps_stitch_cells,
            ..LayoutParams::default()
        }
    }

    pub fn sc_params(&self) -> ScParams {
        ScParams {
            quadrature_order: self.quad_order,
            tolerance: self.solver_tolerance,
            ..ScParams::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Input,
    Raster,
    Distance,
    Skeleton,
    Signature,
    Cutlines,
    Partition,
    Maps,
    Layout,
    Encoding,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// A stage failure with the input it was working on.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed for {input}: {source}")]
pub struct StageError {
    pub stage: Stage,
    pub input: String,
    #[source]
    pub source: LensError,
}

impl StageError {
    pub fn class(&self) -> ErrorClass {
        self.source.class()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResidual {
    pub node: usize,
    pub vertices: usize,
    pub residual: f64,
    pub cached: bool,
}

/// Run summary. Timings vary between runs; everything else is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub footprint: String,
    pub vertices: usize,
    pub facades: usize,
    pub area: f64,
    pub cell_size: f64,
    pub junctions: usize,
    pub nodes: usize,
    pub cutlines: usize,
    /// Relative difference between the node areas and the footprint area.
    pub area_error: f64,
    pub maps: Vec<MapResidual>,
    pub maps_from_cache: usize,
    pub ribbons: usize,
    pub levels: Vec<f64>,
    pub cells: usize,
    pub layout: LayoutStats,
    pub time_steps: Option<usize>,
    pub warnings: usize,
    pub artifacts: Vec<String>,
    pub timings: Vec<StageTiming>,
}

/// Serialized disk maps keyed by the polygon they were solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCache {
    pub quad_order: usize,
    pub maps: Vec<DiskMap>,
}

impl MapCache {
    fn lookup(&self, polygon: &[crate::geometry::Point], quad_order: usize) -> Option<DiskMap> {
        if self.quad_order != quad_order {
            return None;
        }
        let ring = crate::scmap::merge_collinear(polygon, 1e-8);
        self.maps
            .iter()
            .find(|m| same_ring(&m.vertices, &ring))
            .cloned()
    }
}

fn same_ring(a: &[crate::geometry::Point], b: &[crate::geometry::Point]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut rev: Vec<_> = b.to_vec();
    rev.reverse();
    a == b || a == rev.as_slice()
}

/// Files produced by a run, held in memory until every stage has passed.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Writes every file under `dir`; on failure removes what was written.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| {
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| LensError::io(parent.display().to_string(), e))?;
                }
                std::fs::write(&path, bytes)
                    .map_err(|e| LensError::io(path.display().to_string(), e))?;
                written.push(path);
            }
            Ok(())
        })();
        if result.is_err() {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
        }
        result
    }
}

/// Result of a run: in-memory products plus the files to write.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub layout: RibbonLayout,
    pub lens: Option<EncodedLens>,
    pub maps: Vec<DiskMap>,
    pub report: RunReport,
    pub artifacts: Artifacts,
}

fn pgm(width: usize, height: usize, value: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for j in (0..height).rev() {
        for i in 0..width {
            out.push(value(i, j));
        }
    }
    out
}

fn skeleton_pgms(sk: &SkeletonImage) -> (Vec<u8>, Vec<u8>) {
    let counts = sk.neighbor_counts();
    let idx = |i: usize, j: usize| j * sk.width + i;
    let image = pgm(sk.width, sk.height, |i, j| {
        if sk.cells[idx(i, j)] {
            255
        } else {
            0
        }
    });
    let neighbors = pgm(sk.width, sk.height, |i, j| {
        if sk.cells[idx(i, j)] {
            // Skeletal cells stay visible even with no neighbours.
            64 + 24 * counts[idx(i, j)].min(8)
        } else {
            0
        }
    });
    (image, neighbors)
}

struct Timer {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Timer {
    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// Runs every stage without touching the output directory.
pub fn execute(config: &PipelineConfig) -> Result<RunOutput, StageError> {
    let input = config.footprint.display().to_string();
    let at = |stage: Stage| {
        let input = input.clone();
        move |source: LensError| StageError {
            stage,
            input: input.clone(),
            source,
        }
    };
    config.validate().map_err(at(Stage::Config))?;
    let threads = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| at(Stage::Config)(LensError::InvalidInput(format!("thread pool: {e}"))))?;
    pool.install(|| execute_in_pool(config, &at))
}

fn execute_in_pool<F, G>(config: &PipelineConfig, at: &F) -> Result<RunOutput, StageError>
where
    F: Fn(Stage) -> G,
    G: FnOnce(LensError) -> StageError,
{
    let warnings_before = crate::warning_count();
    let mut timer = Timer {
        timings: Vec::new(),
        last: Instant::now(),
    };
    let mut artifacts = Artifacts::default();

    let poly: FootprintPolygon = read_footprint(
        &config.footprint,
        config.projection,
        config.facades.as_deref(),
    )
    .map_err(at(Stage::Input))?;
    let series = match &config.data {
        Some(p) => Some(
            read_series_csv(p, config.cyclic).map_err(|source| StageError {
                stage: Stage::Input,
                input: p.display().to_string(),
                source,
            })?,
        ),
        None => None,
    };
    timer.lap(Stage::Input);

    let grid = rasterize(&poly, config.grid_res).map_err(at(Stage::Raster))?;
    timer.lap(Stage::Raster);
    let dist = distance_field(&poly, &grid).map_err(at(Stage::Distance))?;
    timer.lap(Stage::Distance);
    let skeleton = skeletonize_polygon(&grid, poly.vertices()).map_err(at(Stage::Skeleton))?;
    timer.lap(Stage::Skeleton);
    let sig_params = SignatureParams::default();
    let signature = extract_signature(&skeleton, &sig_params).map_err(at(Stage::Signature))?;
    timer.lap(Stage::Signature);
    let cuts = compute_cutlines_with(&poly, &skeleton, &signature, &dist, &sig_params)
        .map_err(at(Stage::Cutlines))?;
    timer.lap(Stage::Cutlines);
    let graph = partition_with(
        &poly,
        &cuts,
        &PartitionParams {
            resolution: config.grid_res,
            signature: sig_params,
        },
    )
    .map_err(at(Stage::Partition))?;
    let node_area: f64 = graph.nodes.iter().map(|n| n.area).sum();
    let area_error = (node_area - poly.area()).abs() / poly.area();
    timer.lap(Stage::Partition);

    let cache_path = config.out.join(CACHE_FILE);
    let cache: Option<MapCache> = if config.use_cache && cache_path.exists() {
        let text = read_text(&cache_path).map_err(at(Stage::Maps))?;
        Some(serde_json::from_str(&text).map_err(|e| at(Stage::Maps)(e.into()))?)
    } else {
        None
    };
    let sc = config.sc_params();
    let solved: Vec<(DiskMap, bool)> = graph
        .nodes
        .par_iter()
        .map(|n| {
            match cache
                .as_ref()
                .and_then(|c| c.lookup(&n.polygon, config.quad_order))
            {
                Some(m) => Ok((m, true)),
                None => solve_parameters_with(&n.polygon, &sc).map(|m| (m, false)),
            }
        })
        .collect::<Result<_>>()
        .map_err(at(Stage::Maps))?;
    let residuals: Vec<MapResidual> = solved
        .iter()
        .enumerate()
        .map(|(node, (m, cached))| MapResidual {
            node,
            vertices: m.len(),
            residual: m.residual,
            cached: *cached,
        })
        .collect();
    let maps: Vec<DiskMap> = solved.into_iter().map(|(m, _)| m).collect();
    timer.lap(Stage::Maps);

    let layout = assemble_layout(
        &poly,
        &graph,
        &maps,
        &dist,
        config.ribbons,
        &config.layout_params(),
    )
    .map_err(at(Stage::Layout))?;
    timer.lap(Stage::Layout);

    let lens = match series {
        Some(series) => {
            let mut lens = bind_series(layout.clone(), series).map_err(at(Stage::Encoding))?;
            lens.two_tone = config.two_tone;
            lens.glyphs = config.glyphs;
            lens.time_direction = config.time_direction;
            let mode = config.order_mode().map_err(at(Stage::Encoding))?;
            if mode != OrderMode::Chronological {
                lens = reorder(&lens, mode).map_err(at(Stage::Encoding))?;
            }
            if let Some(f) = config.value_filter().map_err(at(Stage::Encoding))? {
                lens =
                    filter_values(&lens, f.lo, f.hi, f.prominence).map_err(at(Stage::Encoding))?;
            }
            Some(lens)
        }
        None => None,
    };
    timer.lap(Stage::Encoding);

    artifacts.add(LAYOUT_FILE, layout.to_json().map_err(at(Stage::Output))?);
    let style = SvgStyle {
        width: config.svg_width,
        ..SvgStyle::default()
    };
    match &lens {
        Some(l) => {
            artifacts.add(LENS_FILE, export_lens(l).map_err(at(Stage::Output))?);
            artifacts.add(SVG_FILE, render_svg(l, &style));
        }
        None => artifacts.add(SVG_FILE, layout_svg(&layout)),
    }
    let cache_doc = MapCache {
        quad_order: config.quad_order,
        maps: maps.clone(),
    };
    artifacts.add(
        CACHE_FILE,
        serde_json::to_string(&cache_doc).map_err(|e| at(Stage::Output)(e.into()))?,
    );
    if config.debug_dumps {
        let (image, neighbors) = skeleton_pgms(&skeleton);
        artifacts.add("debug/skeleton.pgm", image);
        artifacts.add("debug/neighbors.pgm", neighbors);
        let gj = serde_json::to_string_pretty(&to_geojson(&graph))
            .map_err(|e| at(Stage::Output)(e.into()))?;
        artifacts.add("debug/partition.geojson", gj);
        artifacts.add("debug/partition.dot", to_dot(&graph));
    }
    timer.lap(Stage::Output);

    let mut names: Vec<String> = artifacts.files.iter().map(|(n, _)| n.clone()).collect();
    names.push(REPORT_FILE.into());
    let report = RunReport {
        footprint: config.footprint.display().to_string(),
        vertices: poly.len(),
        facades: layout.facades.len(),
        area: poly.area(),
        cell_size: grid.cell_size,
        junctions: signature.junctions.len(),
        nodes: graph.nodes.len(),
        cutlines: graph.cutlines.len(),
        area_error,
        maps_from_cache: residuals.iter().filter(|r| r.cached).count(),
        maps: residuals,
        ribbons: layout.ribbon_count(),
        levels: layout.ribbons.iter().map(|r| r.d_w).collect(),
        cells: layout.cells.len(),
        layout: layout.stats.clone(),
        time_steps: lens
            .as_ref()
            .and_then(|l| l.series.first())
            .map(|s| s.len()),
        warnings: crate::warning_count() - warnings_before,
        artifacts: names,
        timings: timer.timings,
    };
    let report_json =
        serde_json::to_string_pretty(&report).map_err(|e| at(Stage::Output)(e.into()))?;
    artifacts.add(REPORT_FILE, report_json);
    Ok(RunOutput {
        layout,
        lens,
        maps,
        report,
        artifacts,
    })
}

/// Runs the pipeline and writes its artifacts under `config.out`.
pub fn run(config: &PipelineConfig) -> Result<RunOutput, StageError> {
    let out = execute(config)?;
    out.artifacts
        .write(&config.out)
        .map_err(|source| StageError {
            stage: Stage::Output,
            input: config.out.display().to_string(),
            source,
        })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let c = PipelineConfig::from_toml("footprint = \"a.wkt\"\nribbons = 6\ntwo_tone = true\n")
            .unwrap();
        assert_eq!(c.ribbons, 6);
        assert!(c.two_tone);
        assert_eq!(c.grid_res, 512);
        c.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut c = PipelineConfig {
            footprint: "a.wkt".into(),
            ..PipelineConfig::default()
        };
        c.grid_res = 16;
        assert!(c.validate().is_err());
        c.grid_res = 64;
        c.eps_level_cells = 0.0;
        assert!(c.validate().is_err());
        c.eps_level_cells = 0.5;
        c.order = "sideways".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_key_names_line() {
        match PipelineConfig::from_toml("ribbons = 4\nribons = 5\n").unwrap_err() {
            LensError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }
}
