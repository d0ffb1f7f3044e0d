use std::fs;
use std::path::{Path, PathBuf};

use lens_core::pipeline::{
    execute, run, PipelineConfig, Stage, CACHE_FILE, LAYOUT_FILE, LENS_FILE, REPORT_FILE, SVG_FILE,
};
use lens_core::{ErrorClass, LensError};
use tempfile::TempDir;

const RECT_WKT: &str = "POLYGON ((0 0, 20 0, 20 10, 0 10, 0 0))";
const L_WKT: &str = "POLYGON ((0 0, 30 0, 30 10, 10 10, 10 30, 0 30, 0 0))";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv(facades: usize, steps: usize) -> String {
    let mut s = String::from("facade_id,time_index,value,time_label\n");
    for f in 0..facades {
        for t in 0..steps {
            s.push_str(&format!("f{f},{t},{},s{t}\n", (f * 7 + t * 3) % 11));
        }
    }
    s
}

fn config(dir: &TempDir, wkt: &str, data: Option<&str>) -> PipelineConfig {
    PipelineConfig {
        footprint: write(dir.path(), "footprint.wkt", wkt),
        data: data.map(|d| write(dir.path(), "data.csv", d)),
        grid_res: 256,
        out: dir.path().join("out"),
        ..PipelineConfig::default()
    }
}

#[test]
fn rectangle_with_data_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let mut c = config(&dir, RECT_WKT, Some(&csv(4, 4)));
    c.glyphs = true;
    c.debug_dumps = true;
    let out = run(&c).unwrap();
    for name in [
        LAYOUT_FILE,
        LENS_FILE,
        SVG_FILE,
        CACHE_FILE,
        REPORT_FILE,
        "debug/partition.dot",
        "debug/skeleton.pgm",
    ] {
        assert!(c.out.join(name).is_file(), "{name}");
    }
    assert_eq!(out.report.nodes, 1);
    assert_eq!(out.report.cells, 16);
    assert_eq!(out.report.time_steps, Some(4));
    let lens: serde_json::Value =
        serde_json::from_slice(&fs::read(c.out.join(LENS_FILE)).unwrap()).unwrap();
    assert_eq!(lens["schema_version"], 1);
    assert_eq!(
        lens["cells"][0]["time_label"]
            .as_str()
            .unwrap()
            .chars()
            .next(),
        Some('s')
    );
    let svg = fs::read_to_string(c.out.join(SVG_FILE)).unwrap();
    assert!(svg.contains("class=\"glyph\""));
}

#[test]
fn l_footprint_report_counts_nodes_and_cutlines() {
    let dir = TempDir::new().unwrap();
    let c = config(&dir, L_WKT, None);
    let out = run(&c).unwrap();
    assert_eq!(out.report.nodes, 2);
    assert_eq!(out.report.cutlines, 1);
    assert_eq!(out.report.facades, 6);
    assert_eq!(out.report.cells, 24);
    assert!(out.report.area_error < 0.005);
    assert!(out.report.layout.max_stitch_gap <= out.report.cell_size);
    assert!(!c.out.join(LENS_FILE).exists());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(c.out.join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report["nodes"], 2);
}

#[test]
fn malformed_csv_names_file_and_line() {
    let dir = TempDir::new().unwrap();
    let bad = "facade_id,time_index,value\nf0,0,1.5\nf0,1,warm\n";
    let c = config(&dir, RECT_WKT, Some(bad));
    let e = run(&c).unwrap_err();
    assert_eq!(e.stage, Stage::Input);
    assert_eq!(e.class(), ErrorClass::Input);
    assert!(e.input.ends_with("data.csv"));
    match &e.source {
        LensError::Parse { line, .. } => assert_eq!(*line, 3),
        other => panic!("{other}"),
    }
    assert!(!c.out.exists(), "partial output written");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut c = config(&dir, L_WKT, Some(&csv(6, 4)));
    c.two_tone = true;
    c.glyphs = true;
    c.filter = Some("2:8:0.3".into());
    let a = execute(&c).unwrap();
    let b = execute(&c).unwrap();
    for (name, bytes) in &a.artifacts.files {
        if name == REPORT_FILE {
            continue;
        }
        assert_eq!(Some(bytes.as_slice()), b.artifacts.get(name), "{name}");
    }
    let mut threaded = c.clone();
    threaded.threads = Some(1);
    let single = execute(&threaded).unwrap();
    assert_eq!(single.artifacts.get(SVG_FILE), a.artifacts.get(SVG_FILE));
}

#[test]
fn cached_maps_reproduce_the_geometry() {
    let dir = TempDir::new().unwrap();
    let mut c = config(&dir, L_WKT, Some(&csv(6, 4)));
    let first = run(&c).unwrap();
    assert_eq!(first.report.maps_from_cache, 0);
    c.use_cache = true;
    let second = run(&c).unwrap();
    assert_eq!(second.report.maps_from_cache, 2);
    for (a, b) in first.maps.iter().zip(&second.maps) {
        for (x, y) in a.prevertices.iter().zip(&b.prevertices) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    let pts = |l: &lens_core::ribbon::RibbonLayout| -> Vec<(f64, f64)> {
        l.ribbons
            .iter()
            .flat_map(|r| r.loops.iter().flatten())
            .map(|p| (p.x, p.y))
            .collect()
    };
    let (p, q) = (pts(&first.layout), pts(&second.layout));
    assert_eq!(p.len(), q.len());
    for (a, b) in p.iter().zip(&q) {
        assert!((a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12);
    }
    // A different quadrature order misses the cache.
    c.quad_order = 10;
    assert_eq!(run(&c).unwrap().report.maps_from_cache, 0);
}

#[test]
fn solver_failure_leaves_no_artifacts() {
    let dir = TempDir::new().unwrap();
    let c = config(&dir, "POLYGON ((0 0, 160 0, 160 10, 0 10, 0 0))", None);
    let e = run(&c).unwrap_err();
    assert_eq!(e.stage, Stage::Maps);
    assert_eq!(e.class(), ErrorClass::Solver);
    assert!(!c.out.exists());
}

#[test]
fn tiny_level_tolerance_is_a_layout_error() {
    let dir = TempDir::new().unwrap();
    let mut c = config(&dir, L_WKT, None);
    c.eps_level_cells = 1e-30;
    let e = execute(&c).unwrap_err();
    assert_eq!(e.stage, Stage::Layout);
    assert_eq!(e.class(), ErrorClass::Layout);
}

#[test]
fn geographic_geojson_and_facade_sidecar() {
    let dir = TempDir::new().unwrap();
    // About 44 m by 22 m near Zurich.
    let gj = r#"{"type": "Feature", "properties": {}, "geometry": {"type": "Polygon", "coordinates": [[
        [8.5400, 47.3700], [8.5406, 47.3700], [8.5406, 47.3702], [8.5400, 47.3702], [8.5400, 47.3700]]]}}"#;
    let sidecar = r#"{"0": "south", "1": "east", "2": "north", "3": "west"}"#;
    let c = PipelineConfig {
        footprint: write(dir.path(), "b.geojson", gj),
        facades: Some(write(dir.path(), "facades.json", sidecar)),
        grid_res: 256,
        out: dir.path().join("out"),
        ..PipelineConfig::default()
    };
    let out = execute(&c).unwrap();
    assert_eq!(out.layout.facades, ["south", "east", "north", "west"]);
    let xs: Vec<f64> = out.layout.footprint.iter().map(|p| p.x).collect();
    let width =
        xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
    let want = 0.0006f64.to_radians() * 6_371_008.8 * 47.3701f64.to_radians().cos();
    assert!(
        (width - want).abs() / want < 1e-3,
        "width {width} vs {want}"
    );
}

#[test]
fn series_must_match_layout_facades() {
    let dir = TempDir::new().unwrap();
    let c = config(&dir, RECT_WKT, Some(&csv(3, 4)));
    let e = execute(&c).unwrap_err();
    assert_eq!(e.stage, Stage::Encoding);
    assert!(matches!(e.source, LensError::Binding(_)));
    assert!(e.source.to_string().contains("f3"));
}
