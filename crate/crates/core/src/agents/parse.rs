use crate::gps::{parse_graph_jsonl, serialize_graph, GpsGraph};
use crate::llm::{extract_code_block, AgentRole, ChatMessage};
use crate::program::{render_diagnostics, Diagnostic};
use crate::render::{encode_png, legend_text, preset_cameras, render_bboxes};

use super::prompts::{self, fill};
use super::{AgentError, Session};

/// Graph and notes from a Parser reply: the ```jsonl block (or, without
/// one, every line that starts with `{`) plus the `- root:` line.
pub fn read_graph_reply(reply: &str) -> Result<(GpsGraph, Vec<String>), Vec<Diagnostic>> {
    let (block, warning) = extract_code_block(reply, Some("jsonl"));
    let mut notes: Vec<String> = Vec::new();
    let body = match warning {
        Some(w) if w.contains("no fenced") => {
            notes.push("no jsonl block; reading the JSON lines of the reply".into());
            reply
                .lines()
                .filter(|l| l.trim_start().starts_with('{'))
                .collect::<Vec<_>>()
                .join("\n")
        }
        Some(w) => {
            notes.push(w);
            block
        }
        None => block,
    };
    let (mut graph, warns) = parse_graph_jsonl(&body)?;
    notes.extend(warns.iter().map(|d| d.to_string()));
    if let Some(root) = root_line(reply) {
        graph.root_summary = root;
    }
    Ok((graph, notes))
}

fn root_line(reply: &str) -> Option<String> {
    reply.lines().find_map(|l| {
        let t = l.trim().trim_start_matches(['-', '*']).trim_start();
        let head = t.get(..5)?;
        head.eq_ignore_ascii_case("root:").then(|| t[5..].trim().to_string())
    })
}

/// The graph written the way the Parser is asked to answer.
fn graph_as_reply(graph: &GpsGraph) -> String {
    let mut s = String::new();
    if !graph.root_summary.is_empty() {
        s.push_str(&format!("- root: {}\n\n", graph.root_summary));
    }
    s.push_str("```jsonl\n");
    s.push_str(&serialize_graph(graph));
    s.push_str("```\n");
    s
}

impl Session<'_> {
    pub fn parse_shape(&self, shape: &str) -> Result<GpsGraph, AgentError> {
        if shape.trim().is_empty() {
            return Err(AgentError::EmptyPrompt);
        }
        let mut messages = vec![
            ChatMessage::system(prompts::PARSER_SYSTEM),
            ChatMessage::user(fill(prompts::PARSE, &[("shape", shape.trim())])),
        ];
        let mut last = Vec::new();
        for attempt in 1..=self.cfg.parse_attempts {
            let reply = self.call(AgentRole::Parser, &messages)?;
            match read_graph_reply(&reply) {
                Ok((graph, notes)) => {
                    for n in notes {
                        self.warn(format!("parser reply: {n}"));
                    }
                    return Ok(graph);
                }
                Err(diags) => {
                    log::info!("parser attempt {attempt} unreadable:\n{}", render_diagnostics(&diags));
                    messages.push(ChatMessage::assistant(reply));
                    messages.push(ChatMessage::user(fill(
                        prompts::PARSE_RETRY,
                        &[("diagnostics", &render_diagnostics(&diags))],
                    )));
                    last = diags;
                }
            }
        }
        Err(AgentError::UnparseableGraph {
            attempts: self.cfg.parse_attempts,
            diagnostics: last,
        })
    }

    /// `cfg.n_bootstrap` rounds of box renders, Evaluator feedback and a
    /// conditioned re-parse. Nodes whose descriptions survive a round keep
    /// their bounds; changed and new nodes get fresh boxes.
    pub fn bootstrap(&self, graph: GpsGraph, shape: &str) -> Result<GpsGraph, AgentError> {
        let mut graph = graph;
        for round in 1..=self.cfg.n_bootstrap {
            if let Some(n) = graph.nodes.iter().find(|n| n.bounds.is_none()) {
                return Err(AgentError::MissingBounds(n.name.clone()));
            }
            let mut images = Vec::new();
            let mut legend = Vec::new();
            for cam in preset_cameras() {
                let (img, l) = render_bboxes(&graph, &cam, self.cfg.image_size)?;
                let png = encode_png(&img);
                self.write_artifact(&format!("bootstrap/round{round}/render_{}.png", cam.name), &png);
                images.push(png);
                legend = l;
            }
            let ask = fill(
                prompts::BOOTSTRAP_FEEDBACK,
                &[("shape", shape.trim()), ("legend", &legend_text(&legend))],
            );
            let feedback = self.call(
                AgentRole::Evaluator,
                &[ChatMessage::system(prompts::EVALUATOR_SYSTEM), ChatMessage::user(ask).with_images(images)],
            )?;
            self.write_artifact(&format!("bootstrap/round{round}/feedback.txt"), feedback.as_bytes());

            let messages = [
                ChatMessage::system(prompts::PARSER_SYSTEM),
                ChatMessage::user(fill(prompts::PARSE, &[("shape", shape.trim())])),
                ChatMessage::assistant(graph_as_reply(&graph)),
                ChatMessage::user(fill(prompts::BOOTSTRAP_UPDATE, &[("feedback", feedback.trim())])),
            ];
            let reply = self.call(AgentRole::Parser, &messages)?;
            let (mut updated, notes) = match read_graph_reply(&reply) {
                Ok(r) => r,
                Err(diags) => {
                    self.warn(format!(
                        "bootstrap round {round}: the updated graph could not be read; keeping the previous one\n{}",
                        render_diagnostics(&diags)
                    ));
                    continue;
                }
            };
            for n in notes {
                self.warn(format!("parser reply: {n}"));
            }
            if updated.root_summary.is_empty() {
                updated.root_summary = graph.root_summary.clone();
            }
            let mut changed = Vec::new();
            for n in &mut updated.nodes {
                match graph.node(&n.name) {
                    Some(old) if old.same_description(n) => {
                        n.bounds = old.bounds;
                        n.code = old.code.clone();
                        n.best_score = old.best_score;
                    }
                    _ => {
                        n.bounds = None;
                        changed.push(n.name.clone());
                    }
                }
            }
            log::info!("bootstrap round {round}: {} changed or new nodes", changed.len());
            graph = if changed.is_empty() {
                updated
            } else {
                self.generate_bboxes(updated, shape, Some(&changed))?
            };
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentConfig;
    use crate::gps::{BoundingVolume, GpsNode};
    use crate::llm::FnBackend;
    use std::sync::atomic::{AtomicUsize, Ordering};

    const BACKREST: &str = "- root: backrest\n\n```jsonl\n{\"node\": \"backrest\", \"shape_description\": \"a flat slightly curved panel\", \"bounding_volume\": \"upright at the back of the seat\"}\n```";

    #[test]
    fn reads_reply() {
        let (g, _) = read_graph_reply(BACKREST).unwrap();
        assert_eq!(g.names(), ["backrest"]);
        assert_eq!(g.root_summary, "backrest");
        let (g, notes) = read_graph_reply("{\"node\": \"a\", \"shape_description\": \"x\", \"bounding_volume\": \"y\"}").unwrap();
        assert_eq!(g.names(), ["a"]);
        assert_eq!(notes.len(), 1);
        assert!(read_graph_reply("nothing here").is_err());
    }

    #[test]
    fn reply_round_trip() {
        let mut g = GpsGraph::default();
        g.root_summary = "legs, seat".into();
        g.nodes.push(GpsNode::new("seat", "slab", "middle").with_bounds(BoundingVolume::unit()));
        let (back, _) = read_graph_reply(&graph_as_reply(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn parse_retries_then_succeeds() {
        let n = AtomicUsize::new(0);
        let b = FnBackend::new(move |_| {
            Ok(if n.fetch_add(1, Ordering::SeqCst) == 0 {
                "```jsonl\n{\"node\": \"backrest\", \n```".into()
            } else {
                BACKREST.into()
            })
        });
        let s = Session::new(&b, AgentConfig::default()).unwrap();
        let g = s.parse_shape("a chair").unwrap();
        assert_eq!(g.nodes.len(), 1);
        let reqs = b.requests();
        assert_eq!(reqs.len(), 2);
        assert!(reqs[1].messages.last().unwrap().text.contains("line "));
    }

    #[test]
    fn parse_gives_up_and_rejects_empty() {
        let b = FnBackend::new(|_| Ok("I cannot".into()));
        let s = Session::new(&b, AgentConfig::default()).unwrap();
        assert!(matches!(s.parse_shape("chair"), Err(AgentError::UnparseableGraph { attempts: 3, .. })));
        assert_eq!(b.count(AgentRole::Parser), 3);
        assert_eq!(s.parse_shape("  "), Err(AgentError::EmptyPrompt));
        assert_eq!(b.count(AgentRole::Parser), 3);
    }

    #[test]
    fn bootstrap_zero_rounds() {
        let b = FnBackend::new(|_| panic!("no calls expected"));
        let cfg = AgentConfig { n_bootstrap: 0, ..AgentConfig::default() };
        let s = Session::new(&b, cfg).unwrap();
        let mut g = GpsGraph::default();
        g.nodes.push(GpsNode::new("a", "x", "y").with_bounds(BoundingVolume::unit()));
        assert_eq!(s.bootstrap(g.clone(), "thing").unwrap(), g);
        assert!(b.requests().is_empty());
    }

    #[test]
    fn bootstrap_bad_reparse_is_noop() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Evaluator => "looks fine".into(),
                _ => "garbage".into(),
            })
        });
        let cfg = AgentConfig { n_bootstrap: 1, image_size: 32, ..AgentConfig::default() };
        let s = Session::new(&b, cfg).unwrap();
        let mut g = GpsGraph::default();
        g.nodes.push(GpsNode::new("a", "x", "y").with_bounds(BoundingVolume::unit()));
        assert_eq!(s.bootstrap(g.clone(), "thing").unwrap(), g);
        assert_eq!(b.requests().len(), 2);
        assert_eq!(b.requests()[0].image_count(), 3);
        assert!(s.warnings()[0].contains("keeping the previous"));
    }
}
