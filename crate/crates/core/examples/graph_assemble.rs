//! Reads a part graph, fits each part into its box and assembles the
//! shape. Parts without a program become plain boxes.
//!
//!     cargo run --example graph_assemble -- [graph.gps.jsonl] [out.obj]

use shapecraft::executor::{assemble, ExecOptions};
use shapecraft::gps::{graph_overview, parse_graph_jsonl, serialize_graph};
use shapecraft::program::render_diagnostics;

const TABLE: &str = r#"{"root_summary": "top, legs"}
{"node": "top", "shape_description": "a thick round slab", "bounding_volume": "at table height", "bounds": [0, 0, 0.75, 1.2, 1.2, 0.05],
 "code": "top = cylinder(name=\"top\", vertices=48)\n"}
{"node": "legs", "shape_description": "four square posts", "bounding_volume": "under the top", "bounds": [0, 0, 0.36, 0.8, 0.8, 0.72],
 "code": "leg = cube(name=\"leg\", position=(1, 1, 0), scale=(0.1, 0.1, 1))\nModifiers.mirror(leg, axis=(True, True, False))\n"}
{"node": "rug", "shape_description": "a flat mat", "bounding_volume": "on the floor", "bounds": [0, 0, 0.005, 2, 1.5, 0.01]}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(p) => std::fs::read_to_string(p)?,
        None => TABLE.to_string(),
    };
    let out = args.next().unwrap_or_else(|| "assembled.obj".into());
    let (graph, warnings) = parse_graph_jsonl(&text).map_err(|d| render_diagnostics(&d))?;
    print!("{}", render_diagnostics(&warnings));
    println!("{}", graph_overview(&graph));

    let asm = assemble(&graph, &ExecOptions::default());
    for m in &asm.components {
        let b = m.aabb()?;
        println!("{:<6} min {:?} max {:?}", m.component_tag.as_deref().unwrap_or(""), b.min.to_array(), b.max.to_array());
    }
    print!("{}", asm.failure_report());
    std::fs::write(&out, asm.to_obj())?;
    println!("wrote {out}; the graph serializes back to:\n{}", serialize_graph(&graph));
    Ok(())
}
