//! The whole agent pipeline (parse, boxes, bootstrapping, modelling,
//! assembly) replayed from a recorded transcript, so it runs offline.
//!
//!     cargo run --example scripted_pipeline -- [transcript.jsonl] [out_dir]

use std::path::PathBuf;

use shapecraft::agents::{AgentConfig, Session};
use shapecraft::executor::assemble;
use shapecraft::llm::ScriptedBackend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let transcript = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/router.jsonl"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline_run".into()));

    let backend = ScriptedBackend::from_file(&transcript)?;
    let cfg = AgentConfig { m: 1, t: 2, n_bootstrap: 1, image_size: 256, ..AgentConfig::default() };
    let session = Session::new(&backend, cfg)?.with_artifacts(&out);

    let shape = "a wifi router with two antennas";
    let graph = session.parse_shape(shape)?;
    println!("parts: {:?}", graph.names());
    let graph = session.generate_bboxes(graph, shape, None)?;
    let graph = session.bootstrap(graph, shape)?;
    for n in &graph.nodes {
        let b = n.bounds.expect("every part has a box");
        println!("  {:<14} centre {:?} size {:?}", n.name, b.center.to_array(), b.size.to_array());
    }
    let outcome = session.model_shape(graph)?;
    for p in &outcome.paths {
        println!("  {} path {}: scores {:?}{}", p.node, p.path, p.scores, if p.stopped_early { " (stopped early)" } else { "" });
    }
    let asm = assemble(&outcome.graph, &session.cfg.exec);
    std::fs::write(out.join("assembled.obj"), asm.to_obj())?;
    for w in session.warnings() {
        println!("warning: {w}");
    }
    println!("{} of {} responses used; artifacts in {}", backend.consumed(), backend.consumed() + backend.remaining(), out.display());
    Ok(())
}
