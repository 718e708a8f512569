//! The per-part search: M independent paths of up to T refine steps,
//! stopping a path once the Evaluator scores it at least s_tau. The
//! backend here is a closure that hands out fixed scores.
//!
//!     cargo run --example multipath_loop

use std::sync::atomic::{AtomicUsize, Ordering};

use shapecraft::agents::{AgentConfig, Session};
use shapecraft::gps::{BoundingVolume, GpsGraph, GpsNode};
use shapecraft::llm::{AgentRole, FnBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Path 1 reaches 9 on its second try; path 2 never gets past 8.
    let scores = [5u8, 9, 7, 8, 8];
    let evals = AtomicUsize::new(0);
    let backend = FnBackend::new(move |req| {
        Ok(match req.agent {
            AgentRole::Coder => {
                let round = req.messages.len() / 2;
                format!("```dsl\nshade = cone(name=\"shade\", vertices={})\n```", 8 * round)
            }
            _ => {
                let s = scores[evals.fetch_add(1, Ordering::SeqCst).min(scores.len() - 1)];
                format!("{{\"score\": {s}, \"feedback\": \"make it rounder\"}}")
            }
        })
    });
    let cfg = AgentConfig { m: 2, t: 3, s_tau: 9, image_size: 128, ..AgentConfig::default() };
    let session = Session::new(&backend, cfg)?;
    let graph = GpsGraph {
        root_summary: "shade".into(),
        nodes: vec![GpsNode::new("shade", "a cone-shaped lamp shade", "on top").with_bounds(BoundingVolume::unit())],
    };
    let out = session.model_shape(graph)?;
    for p in &out.paths {
        println!("path {}: scores {:?}, best {} at iteration {:?}", p.path, p.scores, p.best, p.best_iteration);
    }
    println!("selected: {:?}", out.selected);
    println!("kept program:\n{}", out.graph.nodes[0].code.as_deref().unwrap_or("(default cube)"));
    println!("coder calls {}, evaluator calls {}", backend.count(AgentRole::Coder), backend.count(AgentRole::Evaluator));
    Ok(())
}
