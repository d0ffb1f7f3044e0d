use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lens_core::encoding::TimeDirection;
use lens_core::io::Projection;
use lens_core::pipeline::{run, PipelineConfig};
use lens_core::ErrorClass;

/// Builds a conformal footprint lens from a building outline and per-facade time series.
#[derive(Debug, Parser)]
#[command(name = "footprint-lens", version)]
struct Args {
    /// TOML config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Footprint polygon (GeoJSON or WKT).
    #[arg(long)]
    footprint: Option<PathBuf>,
    /// CSV with columns facade_id,time_index,value.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON mapping edge index to facade id.
    #[arg(long)]
    facades: Option<PathBuf>,
    /// auto, wgs84 or projected.
    #[arg(long)]
    projection: Option<Projection>,
    /// Treat the series as cyclic (required for wrap:K).
    #[arg(long)]
    cyclic: bool,
    #[arg(long)]
    ribbons: Option<usize>,
    /// Raster cells along the longer side of the bounding box.
    #[arg(long)]
    grid_res: Option<usize>,
    /// Gauss-Jacobi points per integration segment.
    #[arg(long)]
    quad_order: Option<usize>,
    /// chrono, attribute:mean|max|min or wrap:K.
    #[arg(long)]
    order: Option<String>,
    /// LO:HI:P; values outside [LO, HI] are drawn with prominence P.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    two_tone: bool,
    #[arg(long)]
    glyphs: bool,
    /// inner-earliest or outer-earliest.
    #[arg(long)]
    time_direction: Option<TimeDirection>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write skeleton images and the partition graph.
    #[arg(long)]
    debug_dumps: bool,
    /// Reuse disk maps from OUT/cache when their polygons match.
    #[arg(long)]
    use_cache: bool,
    #[arg(long)]
    threads: Option<usize>,
}

impl Args {
    fn config(&self) -> lens_core::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_toml_file(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    c.$f = v;
                }
            )*};
        }
        take!(
            footprint,
            projection,
            ribbons,
            grid_res,
            quad_order,
            order,
            time_direction,
            out
        );
        if self.data.is_some() {
            c.data = self.data.clone();
        }
        if self.facades.is_some() {
            c.facades = self.facades.clone();
        }
        if self.filter.is_some() {
            c.filter = self.filter.clone();
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.cyclic |= self.cyclic;
        c.two_tone |= self.two_tone;
        c.glyphs |= self.glyphs;
        c.debug_dumps |= self.debug_dumps;
        c.use_cache |= self.use_cache;
        Ok(c)
    }
}

fn exit_code(class: ErrorClass) -> ExitCode {
    ExitCode::from(match class {
        ErrorClass::Input => 2,
        ErrorClass::Solver => 3,
        ErrorClass::Layout => 4,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(e.class());
        }
    };
    match run(&config) {
        Ok(out) => {
            let r = &out.report;
            println!(
                "{}: {} nodes, {} cutlines, {} ribbons, {} cells, {} warnings",
                r.footprint, r.nodes, r.cutlines, r.ribbons, r.cells, r.warnings
            );
            for name in &r.artifacts {
                println!("  {}", config.out.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}
