//! Changing a finished shape with a free-text instruction. Only parts whose
//! program the Coder rewrites, and whose new program runs, are replaced.
//!
//!     cargo run --example edit_shape

use shapecraft::agents::{AgentConfig, Session};
use shapecraft::gps::{BoundingVolume, GpsGraph, GpsNode};
use shapecraft::llm::FnBackend;
use shapecraft::program::render_diagnostics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut graph = GpsGraph::default();
    graph.nodes.push(GpsNode::new("seat", "a square cushion", "middle").with_bounds(BoundingVolume::unit()).with_code("seat = cube(name=\"seat\")\n"));
    graph.nodes.push(GpsNode::new("back", "an upright panel", "behind").with_bounds(BoundingVolume::unit()).with_code("back = cube(name=\"back\")\n"));

    let reply = "Rounded the seat; the back needs a fix I could not finish.\n\n\
                 ## seat\n```dsl\nseat = cube(name=\"seat\")\nModifiers.bevel(seat, width=0.2, segments=3)\n```\n\n\
                 ## back\n```dsl\nback = cube(name=\"back\", scale=(1, 0.2)\n```\n";
    let backend = FnBackend::new(move |_| Ok(reply.to_string()));
    let session = Session::new(&backend, AgentConfig::default())?;
    let out = session.edit_shape(graph, "round off the seat cushion")?;
    println!("changed: {:?}", out.changed);
    for (name, diags) in &out.failures {
        print!("{name} kept its old program:\n{}", render_diagnostics(diags));
    }
    for n in &out.graph.nodes {
        println!("--- {}\n{}", n.name, n.code.as_deref().unwrap_or(""));
    }
    Ok(())
}
