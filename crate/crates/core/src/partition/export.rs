use serde_json::{json, Value};

use super::{EdgeLabel, PartitionGraph};

/// FeatureCollection with one Polygon per node and one LineString per cutline.
pub fn to_geojson(graph: &PartitionGraph) -> Value {
    let mut features = Vec::new();
    for n in &graph.nodes {
        let mut ring: Vec<[f64; 2]> = n.polygon.iter().map(|p| [p.x, p.y]).collect();
        if let Some(&first) = ring.first() {
            ring.push(first);
        }
        let labels: Vec<Value> = n
            .edge_labels
            .iter()
            .map(|l| match l {
                EdgeLabel::Facade(id) => json!(id),
                EdgeLabel::Cut(c) => json!(format!("cut:{c}")),
            })
            .collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [ring]},
            "properties": {
                "node": n.id,
                "area": n.area,
                "junctions": n.junctions.len(),
                "endpoints": n.endpoints.len(),
                "double_y": n.double_y,
                "edges": labels,
            }
        }));
    }
    for (i, c) in graph.cutlines.iter().enumerate() {
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[c.endpoints[0].x, c.endpoints[0].y], [c.endpoints[1].x, c.endpoints[1].y]]
            },
            "properties": {"cutline": i, "radius": c.radius, "cutpoint": [c.cutpoint.x, c.cutpoint.y]}
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Graphviz rendering of the partition graph.
pub fn to_dot(graph: &PartitionGraph) -> String {
    let mut s = String::from("digraph partition {\n");
    for n in &graph.nodes {
        s.push_str(&format!(
            "  n{} [label=\"{}\\narea {:.3}\\nJ={} E={}\"{}];\n",
            n.id,
            n.id,
            n.area,
            n.junctions.len(),
            n.endpoints.len(),
            if n.double_y { "" } else { ", style=dashed" }
        ));
    }
    for e in &graph.edges {
        s.push_str(&format!(
            "  n{} -> n{} [label=\"cut {} r={:.3}\"];\n",
            e.from, e.to, e.cutline, graph.cutlines[e.cutline].radius
        ));
    }
    s.push_str("}\n");
    s
}
