use std::fmt::Write;

use super::RibbonLayout;
use crate::svg::Frame;

/// Outline rendering of a layout: footprint, nodes, levels and sector curves.
pub fn layout_svg(layout: &RibbonLayout) -> String {
    let f = Frame::fit(&layout.footprint, 800.0, 20.0);
    let mut s = f.header();
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    for (i, c) in layout.cells.iter().enumerate() {
        let shade = 235 - (i % 4) as u32 * 12;
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"rgb({shade},{shade},{shade})\" fill-rule=\"evenodd\" stroke=\"none\"/>",
            f.rings(&c.polygon)
        );
    }
    for n in &layout.nodes {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>",
            f.rings(std::slice::from_ref(&n.polygon))
        );
    }
    for r in &layout.ribbons {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"#1f4e9c\"/>",
            f.rings(&r.loops)
        );
    }
    for c in layout.sectors.iter().flat_map(|x| &x.curves) {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"#c0392b\"/>",
            f.polyline(c)
        );
    }
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"2\"/>",
        f.rings(std::slice::from_ref(&layout.footprint))
    );
    s.push_str("</svg>\n");
    s
}
