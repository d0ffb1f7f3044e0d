#![allow(dead_code)]

use std::collections::VecDeque;
use std::f64::consts::TAU;

use lens_core::geometry::{
    distance_field, rasterize, DistanceField, FootprintPolygon, Point, RasterGrid,
};
use lens_core::partition::{compute_cutlines, partition, PartitionGraph};
use lens_core::ribbon::{assemble_layout, LayoutParams, RibbonLayout};
use lens_core::scmap::{solve_parameters, DiskMap};
use lens_core::skeleton::{
    extract_signature, skeletonize_polygon, SignatureParams, SkeletonImage, TopoSignature,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ring(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

pub fn square() -> Vec<Point> {
    ring(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])
}

pub fn rect() -> Vec<Point> {
    ring(&[(0., 0.), (2., 0.), (2., 1.), (0., 1.)])
}

pub fn l_shape() -> Vec<Point> {
    ring(&[(0., 0.), (3., 0.), (3., 1.), (1., 1.), (1., 3.), (0., 3.)])
}

pub fn u_shape() -> Vec<Point> {
    ring(&[
        (0., 0.),
        (3., 0.),
        (3., 3.),
        (2., 3.),
        (2., 1.),
        (1., 1.),
        (1., 3.),
        (0., 3.),
    ])
}

pub fn t_shape() -> Vec<Point> {
    ring(&[
        (0., 2.),
        (1., 2.),
        (1., 0.),
        (2., 0.),
        (2., 2.),
        (3., 2.),
        (3., 3.),
        (0., 3.),
    ])
}

pub fn plus_shape() -> Vec<Point> {
    ring(&[
        (1., 0.),
        (2., 0.),
        (2., 1.),
        (3., 1.),
        (3., 2.),
        (2., 2.),
        (2., 3.),
        (1., 3.),
        (1., 2.),
        (0., 2.),
        (0., 1.),
        (1., 1.),
    ])
}

pub fn triangle() -> Vec<Point> {
    let h = 3f64.sqrt() / 2.0;
    ring(&[(0., 0.), (1., 0.), (0.5, h)])
}

pub fn regular_ngon(n: usize, r: f64) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect()
}

/// Named fixtures used across the suites.
pub fn corpus() -> Vec<(&'static str, Vec<Point>)> {
    vec![
        ("square", square()),
        ("rect", rect()),
        ("L", l_shape()),
        ("U", u_shape()),
        ("T", t_shape()),
        ("plus", plus_shape()),
    ]
}

/// Distance from `p` to segment `ab`, written out independently of the crate.
pub fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - qx).powi(2) + (p.y - qy).powi(2)).sqrt()
}

/// Minimum over all edges of the closed ring.
pub fn brute_dist(ring: &[Point], p: Point) -> f64 {
    (0..ring.len())
        .map(|i| seg_dist(p, ring[i], ring[(i + 1) % ring.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// Distance to an open polyline.
pub fn polyline_dist(line: &[Point], p: Point) -> f64 {
    if line.len() == 1 {
        return ((p.x - line[0].x).powi(2) + (p.y - line[0].y).powi(2)).sqrt();
    }
    line.windows(2)
        .map(|w| seg_dist(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd point in polygon.
pub fn inside(ring: &[Point], p: Point) -> bool {
    let mut c = false;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            c = !c;
        }
    }
    c
}

pub fn shoelace(ring: &[Point]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|i| ring[i].x * ring[(i + 1) % n].y - ring[(i + 1) % n].x * ring[i].y)
        .sum::<f64>()
}

pub struct Built {
    pub poly: FootprintPolygon,
    pub grid: RasterGrid,
    pub dist: DistanceField,
    pub skeleton: SkeletonImage,
    pub signature: TopoSignature,
    pub graph: PartitionGraph,
}

pub fn build(r: &[Point], resolution: usize) -> Built {
    let poly = FootprintPolygon::new(r.to_vec()).unwrap();
    build_poly(poly, resolution)
}

pub fn build_poly(poly: FootprintPolygon, resolution: usize) -> Built {
    let grid = rasterize(&poly, resolution).unwrap();
    let dist = distance_field(&poly, &grid).unwrap();
    let skeleton = skeletonize_polygon(&grid, poly.vertices()).unwrap();
    let signature = extract_signature(&skeleton, &SignatureParams::default()).unwrap();
    let cuts = compute_cutlines(&poly, &skeleton, &signature, &dist).unwrap();
    let graph = partition(&poly, &cuts).unwrap();
    Built {
        poly,
        grid,
        dist,
        skeleton,
        signature,
        graph,
    }
}

impl Built {
    pub fn maps(&self) -> Vec<DiskMap> {
        self.graph
            .nodes
            .iter()
            .map(|n| solve_parameters(&n.polygon, 8).unwrap())
            .collect()
    }

    pub fn layout(&self, ribbons: usize) -> (Vec<DiskMap>, RibbonLayout) {
        let maps = self.maps();
        let layout = assemble_layout(
            &self.poly,
            &self.graph,
            &maps,
            &self.dist,
            ribbons,
            &LayoutParams::default(),
        )
        .unwrap();
        (maps, layout)
    }
}

/// Segments of the level set `d = level` of a sampled scalar field, by marching squares.
pub fn marching_squares(
    nx: usize,
    ny: usize,
    at: impl Fn(usize, usize) -> (Point, f64),
    level: f64,
) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    let interp = |(p, a): (Point, f64), (q, b): (Point, f64)| {
        let t = (level - a) / (b - a);
        Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut pts = Vec::new();
            for k in 0..4 {
                let (a, b) = (c[k], c[(k + 1) % 4]);
                if (a.1 >= level) != (b.1 >= level) {
                    pts.push(interp(a, b));
                }
            }
            if pts.len() == 2 {
                out.push((pts[0], pts[1]));
            } else if pts.len() == 4 {
                out.push((pts[0], pts[1]));
                out.push((pts[2], pts[3]));
            }
        }
    }
    out
}

/// Symmetric Hausdorff distance between point samples of two curves,
/// measured point-to-segment in both directions.
pub fn hausdorff(segments: &[(Point, Point)], loops: &[Vec<Point>]) -> f64 {
    let loop_segs: Vec<(Point, Point)> = loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
        .collect();
    let to = |p: Point, segs: &[(Point, Point)]| {
        segs.iter()
            .map(|&(a, b)| seg_dist(p, a, b))
            .fold(f64::INFINITY, f64::min)
    };
    let a = segments
        .iter()
        .flat_map(|&(p, q)| [p, q])
        .map(|p| to(p, &loop_segs))
        .fold(0.0, f64::max);
    let b = loops
        .iter()
        .flatten()
        .map(|&p| to(p, segments))
        .fold(0.0, f64::max);
    a.max(b)
}

pub fn gaps(m: &DiskMap) -> Vec<f64> {
    let t = &m.prevertices;
    let n = t.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                t[0] + TAU - t[n - 1]
            } else {
                t[k] - t[k - 1]
            }
        })
        .collect()
}

/// Length of the boundary image between two prevertex angles: ∫ |φ'(e^{iθ})| dθ.
/// A quintic smoothstep substitution tames the endpoint singularities before a
/// composite midpoint rule.
pub fn arc_length(m: &DiskMap, a: f64, b: f64) -> f64 {
    let n = 200_000;
    let mut sum = 0.0;
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64;
        let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        let theta = a + (b - a) * s;
        sum += m.derivative(Complex64::from_polar(1.0, theta)).norm() * ds;
    }
    sum * (b - a) / n as f64
}

pub fn random_interior(r: &[Point], rng: &mut ChaCha8Rng, count: usize) -> Vec<Point> {
    let xs: Vec<f64> = r.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = r.iter().map(|p| p.y).collect();
    let (x0, x1) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let diam = (x1 - x0).hypot(y1 - y0);
    let mut out = Vec::new();
    while out.len() < count {
        let p = Point::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        if inside(r, p) && brute_dist(r, p) > 1e-6 * diam {
            out.push(p);
        }
    }
    out
}

/// Counts pieces of the footprint left after removing a thin strip around
/// every cutline, on an independent lattice.
pub fn subdivision_oracle(footprint: &[Point], cuts: &[(Point, Point)], n: usize) -> usize {
    let xs = footprint.iter().map(|p| p.x);
    let ys = footprint.iter().map(|p| p.y);
    let (x0, x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let h = (x1 - x0).max(y1 - y0) / n as f64;
    let (w, hgt) = (
        ((x1 - x0) / h).ceil() as usize,
        ((y1 - y0) / h).ceil() as usize,
    );
    let mut open = vec![false; w * hgt];
    for j in 0..hgt {
        for i in 0..w {
            let p = Point::new(x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h);
            open[j * w + i] =
                inside(footprint, p) && cuts.iter().all(|&(a, b)| seg_dist(p, a, b) > 0.75 * h);
        }
    }
    let mut label = vec![usize::MAX; w * hgt];
    let mut count = 0;
    for s in 0..w * hgt {
        if !open[s] || label[s] != usize::MAX {
            continue;
        }
        let mut q = VecDeque::from([s]);
        label[s] = count;
        while let Some(c) = q.pop_front() {
            let (i, j) = (c % w, c / w);
            let nbrs = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (a, b) in nbrs {
                if a < w && b < hgt && open[b * w + a] && label[b * w + a] == usize::MAX {
                    label[b * w + a] = count;
                    q.push_back(b * w + a);
                }
            }
        }
        count += 1;
    }
    count
}

pub fn is_acyclic(g: &PartitionGraph) -> bool {
    // Repeatedly strip sinks.
    let mut alive = vec![true; g.nodes.len()];
    loop {
        let sink = (0..alive.len())
            .find(|&v| alive[v] && !g.edges.iter().any(|e| e.from == v && alive[e.to]));
        match sink {
            Some(v) => alive[v] = false,
            None => return alive.iter().all(|a| !a),
        }
    }
}

/// Brute-force contour of the footprint distance on a lattice finer than the raster.
pub fn oracle_contour(r: &[Point], level: f64, n: usize) -> Vec<(Point, Point)> {
    let xs = r.iter().map(|p| p.x);
    let ys = r.iter().map(|p| p.y);
    let (x0, x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let (hx, hy) = ((x1 - x0) / (n - 1) as f64, (y1 - y0) / (n - 1) as f64);
    let values: Vec<(Point, f64)> = (0..n * n)
        .map(|k| {
            let p = Point::new(x0 + (k % n) as f64 * hx, y0 + (k / n) as f64 * hy);
            let d = brute_dist(r, p);
            (p, if inside(r, p) { d } else { -d })
        })
        .collect();
    marching_squares(n, n, |i, j| values[j * n + i], level)
}
