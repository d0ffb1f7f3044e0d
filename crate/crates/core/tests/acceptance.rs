//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use lens_core::encoding::{
    bind_series, filter_values, render_svg, reorder, OrderMode, Reduction, SvgStyle, TemporalSeries,
};
use lens_core::geometry::Point;
use lens_core::pipeline::{execute, run, PipelineConfig, REPORT_FILE};
use lens_core::scmap::solve_parameters;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sc_corpus() -> Vec<(&'static str, Vec<Point>)> {
    vec![
        ("square", square()),
        ("rect", rect()),
        ("triangle", triangle()),
        ("L", l_shape()),
        ("T", t_shape()),
        (
            "trapezoid",
            ring(&[(0., 0.), (4., 0.), (3., 1.5), (1., 1.5)]),
        ),
        ("24-gon", regular_ngon(24, 1.0)),
    ]
}

fn sc_symmetric() -> Check {
    let mut slowest = 0.0f64;
    for (name, r, want) in [
        ("square", square(), PI / 2.0),
        ("triangle", triangle(), TAU / 3.0),
    ] {
        let t = Instant::now();
        let m = solve_parameters(&r, 8).map_err(|e| format!("{name}: {e}"))?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let worst = gaps(&m)
            .iter()
            .map(|g| (g - want).abs())
            .fold(0.0, f64::max);
        ensure(worst <= 1e-9, || {
            format!("{name}: gap error {worst:.2e} rad")
        })?;
    }
    let t = Instant::now();
    let m = solve_parameters(&rect(), 8).map_err(|e| e.to_string())?;
    slowest = slowest.max(t.elapsed().as_secs_f64());
    let p = &m.prevertices;
    let ratio = arc_length(&m, p[0], p[1]) / arc_length(&m, 0.0, p[0]);
    ensure((ratio - 2.0).abs() <= 1e-6, || {
        format!("rectangle side ratio {ratio}")
    })?;
    ensure(slowest < 1.0, || format!("slowest solve {slowest:.3} s"))?;
    Ok(format!(
        "ratio error {:.1e}, slowest solve {:.1} ms",
        (ratio - 2.0).abs(),
        slowest * 1e3
    ))
}

fn conformality() -> Check {
    let start = Instant::now();
    let corpus = sc_corpus();
    let per = 1000usize.div_ceil(corpus.len());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut count) = (0.0f64, 0);
    for (name, r) in corpus {
        let m = solve_parameters(&r, 8).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..per {
            let z = Complex64::from_polar(0.9 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
            let h = 1e-6;
            let fx = (m.map_forward(z + h) - m.map_forward(z - h)) * (0.5 / h);
            let fy = (m.map_forward(z + Complex64::i() * h)
                - m.map_forward(z - Complex64::i() * h))
                * (0.5 / h);
            let det = fx.x * fy.y - fx.y * fy.x;
            ensure(det > 0.0, || format!("{name}: determinant {det} at {z}"))?;
            let angle = (fx.cross(fy).atan2(fx.dot(fy)).to_degrees() - 90.0).abs();
            worst = worst.max(angle);
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1.0, || format!("angle distortion {worst:.3}°"))?;
    ensure(secs < 10.0, || format!("{secs:.1} s"))?;
    Ok(format!(
        "{count} samples, max distortion {worst:.1e}°, {secs:.2} s"
    ))
}

fn inverse_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut total) = (0.0f64, 0);
    for (name, r) in sc_corpus() {
        let m = solve_parameters(&r, 8).map_err(|e| format!("{name}: {e}"))?;
        let diam = m.diameter();
        for p in random_interior(&r, &mut rng, 1000) {
            let z = m.map_inverse(p).map_err(|e| format!("{name}: {e}"))?;
            let err = m.map_forward(z).dist(p) / diam;
            ensure(err <= 1e-6, || {
                format!("{name}: ({}, {}) off by {err:.2e}·diam", p.x, p.y)
            })?;
            worst = worst.max(err);
            total += 1;
        }
    }
    Ok(format!(
        "{total} points, 0 non-convergences, max error {worst:.1e}·diam"
    ))
}

fn decomposition() -> Check {
    let mut parts = Vec::new();
    for (name, r, nodes, cuts) in [
        ("rect", rect(), 1, 0),
        ("L", l_shape(), 2, 1),
        ("U", u_shape(), 3, 2),
        ("T", t_shape(), 2, 1),
    ] {
        let b = build(&r, 512);
        let g = &b.graph;
        let segs: Vec<(Point, Point)> = g
            .cutlines
            .iter()
            .map(|c| (c.endpoints[0], c.endpoints[1]))
            .collect();
        let pieces = subdivision_oracle(&r, &segs, 300);
        ensure(
            g.nodes.len() == nodes && g.cutlines.len() == cuts && pieces == nodes,
            || {
                format!(
                    "{name}: {} nodes, {} cutlines, oracle {pieces}",
                    g.nodes.len(),
                    g.cutlines.len()
                )
            },
        )?;
        let area: f64 = g.nodes.iter().map(|n| shoelace(&n.polygon).abs()).sum();
        let err = (area - shoelace(&r)).abs() / shoelace(&r);
        ensure(err < 0.005, || format!("{name}: area error {err:.2e}"))?;
        ensure(is_acyclic(g), || format!("{name}: cycle"))?;
        parts.push(format!("{name} {nodes}/{cuts}"));
    }
    Ok(parts.join(", "))
}

fn fixture_config(dir: &TempDir, name: &str, r: &[Point]) -> PipelineConfig {
    let coords: Vec<String> = r
        .iter()
        .chain(r.first())
        .map(|p| format!("{} {}", p.x, p.y))
        .collect();
    let path = dir.path().join(format!("{name}.wkt"));
    fs::write(&path, format!("POLYGON (({}))", coords.join(", "))).unwrap();
    PipelineConfig {
        footprint: path,
        out: dir.path().join(name),
        ..PipelineConfig::default()
    }
}

fn level_sets() -> Check {
    let dir = TempDir::new().unwrap();
    let mut parts = Vec::new();
    for (name, r) in [("L", l_shape()), ("U", u_shape())] {
        let c = fixture_config(&dir, name, &r);
        let t = Instant::now();
        let out = execute(&c).map_err(|e| format!("{name}: {e}"))?;
        let secs = t.elapsed().as_secs_f64();
        let layout = &out.layout;
        let cell = layout.cell_size;
        ensure(layout.ribbons.len() == 4, || {
            format!("{name}: {} ribbons", layout.ribbons.len())
        })?;
        let (mut level_err, mut haus, mut gap) = (0.0f64, 0.0f64, 0.0f64);
        for rb in &layout.ribbons {
            for p in rb.loops.iter().flatten() {
                level_err = level_err.max((brute_dist(&r, *p) - rb.d_w).abs());
            }
            haus = haus.max(hausdorff(&oracle_contour(&r, rb.d_w, 601), &rb.loops));
            gap = gap.max(rb.max_gap);
        }
        ensure(level_err <= c.eps_level_cells * cell, || {
            format!("{name}: level error {level_err:.2e}")
        })?;
        ensure(haus <= 2.0 * cell, || {
            format!("{name}: Hausdorff {:.2} cells", haus / cell)
        })?;
        ensure(gap <= c.eps_stitch_cells * cell, || {
            format!("{name}: stitch gap {:.2} cells", gap / cell)
        })?;
        ensure(secs < 5.0, || format!("{name}: pipeline took {secs:.2} s"))?;
        parts.push(format!(
            "{name}: level {:.2} cells, Hausdorff {:.2} cells, gap {:.2} cells, {secs:.2} s",
            level_err / cell,
            haus / cell,
            gap / cell
        ));
    }
    Ok(parts.join("; "))
}

fn encoding_suite() -> Check {
    let layout = build(&square(), 256).layout(4).1;
    let v = [
        [12.0, 24.5, 15.0, 3.5],
        [11.0, 27.0, 14.0, 2.0],
        [9.5, 21.0, 16.5, 30.0],
        [13.0, 25.5, 12.5, 4.0],
    ];
    let series: Vec<TemporalSeries> = v
        .iter()
        .enumerate()
        .map(|(f, x)| TemporalSeries::unlabeled(format!("f{f}"), x.to_vec(), true).unwrap())
        .collect();
    let lens = bind_series(layout, series).map_err(|e| e.to_string())?;
    let n = lens.ribbon_count();
    ensure(n == 4, || format!("{n} ribbons"))?;
    let modes = [
        OrderMode::Chronological,
        OrderMode::Attribute(Reduction::Mean),
        OrderMode::Attribute(Reduction::Max),
        OrderMode::Attribute(Reduction::Min),
    ];
    let mut laws = 0;
    for mode in modes {
        let base = reorder(&lens, mode).map_err(|e| e.to_string())?;
        let bp = base.permutation();
        for a in 0..=2 * n {
            let once = reorder(&base, OrderMode::Wrap(a)).unwrap();
            let want: Vec<usize> = (0..n).map(|s| bp[(s + a) % n]).collect();
            ensure(once.permutation() == want, || format!("{mode:?}: wrap {a}"))?;
            for b in 0..=2 * n {
                let twice = reorder(&once, OrderMode::Wrap(b)).unwrap();
                let direct = reorder(&base, OrderMode::Wrap((a + b) % n)).unwrap();
                ensure(twice.permutation() == direct.permutation(), || {
                    format!("{mode:?}: {a}+{b}")
                })?;
                laws += 1;
            }
        }
    }
    let values: Vec<f64> = lens.cell_values().iter().map(|c| c.value).collect();
    let bounds = [0.0, 3.5, 10.0, 15.0, 24.5, 30.0];
    for &lo in &bounds {
        for &hi in bounds.iter().filter(|&&h| h >= lo) {
            for p in [0.0, 0.25, 0.5, 1.0] {
                let f = filter_values(&lens, lo, hi, p).unwrap();
                let after: Vec<f64> = f.cell_values().iter().map(|c| c.value).collect();
                ensure(after == values && f.series == lens.series, || {
                    format!("filter [{lo}, {hi}] changed values")
                })?;
                ensure(filter_values(&f, lo, hi, p).unwrap() == f, || {
                    "filter not idempotent".into()
                })?;
            }
        }
    }
    let mut last = (0usize, -1.0f64);
    for i in 0..=600 {
        let pos = lens.palette.position(i as f64 / 600.0);
        ensure((0.0..=1.0).contains(&pos.fraction), || {
            format!("fraction {}", pos.fraction)
        })?;
        ensure((pos.low, pos.fraction) >= last, || {
            format!("two-tone split not monotone at {i}")
        })?;
        last = (pos.low, pos.fraction);
    }
    let mut styled = lens.clone();
    styled.two_tone = true;
    styled.glyphs = true;
    let a = render_svg(&styled, &SvgStyle::default());
    let b = render_svg(&styled.clone(), &SvgStyle::default());
    ensure(a == b, || "SVG differs between renders".into())?;
    Ok(format!(
        "{laws} wrap compositions, filters immutable, split monotone, SVG identical"
    ))
}

fn determinism_and_cache() -> Check {
    let dir = TempDir::new().unwrap();
    let mut c = fixture_config(&dir, "L", &l_shape());
    let data = dir.path().join("data.csv");
    let mut csv = String::from("facade_id,time_index,value\n");
    for f in 0..6 {
        for t in 0..4 {
            csv.push_str(&format!("f{f},{t},{}\n", (f * 5 + t * 3) % 7));
        }
    }
    fs::write(&data, csv).unwrap();
    c.data = Some(data);
    c.two_tone = true;
    c.glyphs = true;
    let first = run(&c).map_err(|e| e.to_string())?;
    let again = execute(&c).map_err(|e| e.to_string())?;
    for (name, bytes) in &first.artifacts.files {
        if name != REPORT_FILE {
            ensure(again.artifacts.get(name) == Some(bytes.as_slice()), || {
                format!("{name} differs")
            })?;
        }
    }
    c.use_cache = true;
    let cached = execute(&c).map_err(|e| e.to_string())?;
    ensure(cached.report.maps_from_cache == first.maps.len(), || {
        "cache not used".into()
    })?;
    let pts = |l: &lens_core::ribbon::RibbonLayout| -> Vec<Point> {
        l.ribbons
            .iter()
            .flat_map(|r| r.loops.iter().flatten().copied())
            .chain(
                l.cells
                    .iter()
                    .flat_map(|c| c.polygon.iter().flatten().copied()),
            )
            .collect()
    };
    let (p, q) = (pts(&first.layout), pts(&cached.layout));
    ensure(p.len() == q.len(), || {
        "cached layout has a different size".into()
    })?;
    let worst = p
        .iter()
        .zip(&q)
        .map(|(a, b)| a.dist(*b))
        .fold(0.0, f64::max);
    ensure(worst <= 1e-12, || {
        format!("cached geometry off by {worst:.2e}")
    })?;
    Ok(format!(
        "{} artifacts identical, cached geometry max deviation {worst:.1e}",
        first.artifacts.files.len() - 1
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 7] = [
        ("SC correctness on symmetric polygons", sc_symmetric),
        ("Conformality suite", conformality),
        ("Inverse round trip", inverse_round_trip),
        ("Decomposition fixtures", decomposition),
        ("Level-set correctness", level_sets),
        ("Encoding suite", encoding_suite),
        ("Determinism & cache", determinism_and_cache),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
