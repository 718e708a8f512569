use crate::executor::{assemble, execute_node, NodeOutput};
use crate::geometry::Mesh;
use crate::gps::{graph_overview, GpsGraph, GpsNode};
use crate::llm::{AgentRole, ChatMessage};
use crate::program::{library_reference, render_diagnostics, Diagnostic, DiagnosticKind};
use crate::render::{encode_png, preset_cameras, render, render_colored, Camera, BASE_COLOR};

use super::bbox::eval_json;
use super::prompts::{self, fill};
use super::{extract_program, AgentError, EvalReport, Session};

const HIGHLIGHT: [u8; 3] = [230, 25, 75];

/// What one path did: its score per iteration and its best.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTrace {
    pub node: String,
    /// 1-based.
    pub path: usize,
    pub scores: Vec<u8>,
    /// 0 when no iteration scored above 0.
    pub best: u8,
    /// Iteration (0-based) whose program is the path's best.
    pub best_iteration: Option<usize>,
    pub stopped_early: bool,
    #[doc(hidden)]
    pub best_code: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub graph: GpsGraph,
    /// In (node order, path index) order.
    pub paths: Vec<PathTrace>,
    /// Chosen path per node (1-based), `None` for the default-cube fallback.
    pub selected: Vec<(String, Option<usize>)>,
}

struct NodeContext<'g> {
    node: &'g GpsNode,
    overview: &'g str,
    /// Every other component, for the global view.
    others: Vec<&'g Mesh>,
}

impl Session<'_> {
    /// Multi-path iterative modelling of every node. Each node gets `M`
    /// independent Coder/Evaluator conversations of up to `T` iterations;
    /// the path with the highest best score (lowest index on ties) wins.
    pub fn model_shape(&self, graph: GpsGraph) -> Result<ModelOutcome, AgentError> {
        if let Some(n) = graph.nodes.iter().find(|n| n.bounds.is_none()) {
            return Err(AgentError::MissingBounds(n.name.clone()));
        }
        let overview = graph_overview(&graph);
        let context = assemble(&graph, &self.cfg.exec);
        let m = self.cfg.m;
        let contexts: Vec<NodeContext> = graph
            .nodes
            .iter()
            .map(|node| NodeContext {
                node,
                overview: &overview,
                others: context
                    .components
                    .iter()
                    .filter(|c| c.component_tag.as_deref() != Some(&node.name))
                    .collect(),
            })
            .collect();
        let work: Vec<usize> = (0..graph.nodes.len() * m).collect();
        let traces = self.map_nodes(&work, |k| self.run_path(&contexts[k / m], k % m + 1))?;

        let mut out = graph.clone();
        let mut selected = Vec::new();
        for (i, node) in out.nodes.iter_mut().enumerate() {
            let paths = &traces[i * m..(i + 1) * m];
            let mut pick: Option<&PathTrace> = None;
            for p in paths {
                if p.best > pick.map_or(0, |q| q.best) {
                    pick = Some(p);
                }
            }
            match pick {
                Some(p) => {
                    node.code = p.best_code.clone();
                    node.best_score = Some(p.best);
                    selected.push((node.name.clone(), Some(p.path)));
                }
                None => {
                    self.warn(format!(
                        "{}: no path produced a program that scored above 0; using the default cube",
                        node.name
                    ));
                    node.code = None;
                    node.best_score = Some(0);
                    selected.push((node.name.clone(), None));
                }
            }
        }
        Ok(ModelOutcome {
            graph: out,
            paths: traces,
            selected,
        })
    }

    fn run_path(&self, ctx: &NodeContext, path: usize) -> Result<PathTrace, AgentError> {
        let node = ctx.node;
        let mut messages = vec![
            ChatMessage::system(prompts::CODER_SYSTEM),
            ChatMessage::user(fill(
                prompts::NODE,
                &[
                    ("overview", ctx.overview),
                    ("node", &node.name),
                    ("geometric", &node.geometric_desc),
                    ("positional", &node.positional_desc),
                    ("library", &library_reference(false)),
                ],
            )),
        ];
        let what = format!("{} path {path}", node.name);
        let reply = self.call(AgentRole::Coder, &messages)?;
        let mut code = extract_program(self, &reply, &what);
        messages.push(ChatMessage::assistant(reply));

        let mut trace = PathTrace {
            node: node.name.clone(),
            path,
            scores: Vec::new(),
            best: 0,
            best_iteration: None,
            stopped_early: false,
            best_code: None,
        };
        for t in 0..self.cfg.t {
            let dir = format!("node/{}/path{path}/iter{t}", node.name);
            self.write_artifact(&format!("{dir}/program.dsl"), code.as_bytes());
            let report = match run_candidate(node, &code, self) {
                Err(diags) => EvalReport {
                    score: 0,
                    feedback: format!("The program failed to run:\n{}", render_diagnostics(&diags)),
                },
                Ok(out) => {
                    let mut r = self.judge_node(ctx, &out.mesh, &code, &dir)?;
                    if !out.warnings.is_empty() {
                        r.feedback = format!(
                            "{}\n\nThe interpreter also reported:\n{}",
                            r.feedback.trim_end(),
                            render_diagnostics(&out.warnings)
                        );
                    }
                    r
                }
            };
            self.write_artifact(&format!("{dir}/eval.json"), eval_json(&report).as_bytes());
            trace.scores.push(report.score);
            if report.score > trace.best {
                trace.best = report.score;
                trace.best_iteration = Some(t);
                trace.best_code = Some(code.clone());
            }
            if report.score >= self.cfg.s_tau {
                trace.stopped_early = true;
                break;
            }
            if t + 1 < self.cfg.t {
                messages.push(ChatMessage::user(fill(
                    prompts::NODE_REFINE,
                    &[("feedback", report.feedback.trim()), ("node", &node.name)],
                )));
                let reply = self.call(AgentRole::Coder, &messages)?;
                code = extract_program(self, &reply, &what);
                messages.push(ChatMessage::assistant(reply));
            }
        }
        Ok(trace)
    }

    fn judge_node(&self, ctx: &NodeContext, mesh: &Mesh, code: &str, dir: &str) -> Result<EvalReport, AgentError> {
        let size = self.cfg.image_size;
        let mut images = Vec::new();
        for cam in preset_cameras() {
            let png = encode_png(&render(std::slice::from_ref(mesh), &cam, size)?);
            self.write_artifact(&format!("{dir}/render_{}.png", cam.name), &png);
            images.push(png);
        }
        let mut items: Vec<(&Mesh, [u8; 3])> = ctx.others.iter().map(|m| (*m, BASE_COLOR)).collect();
        items.push((mesh, HIGHLIGHT));
        let global = Camera::new("global", 45.0, 30.0);
        let png = encode_png(&render_colored(&items, &global, size)?);
        self.write_artifact(&format!("{dir}/render_global.png"), &png);
        images.push(png);
        let node = ctx.node;
        let context = fill(
            prompts::EVAL_NODE,
            &[
                ("node", &node.name),
                ("geometric", &node.geometric_desc),
                ("positional", &node.positional_desc),
                ("overview", ctx.overview),
                ("program", code),
                ("criteria", &prompts::node_criteria()),
            ],
        );
        self.evaluate(images, &context)
    }
}

/// Executes and fits a candidate program. An empty program is an error
/// here rather than the default cube.
fn run_candidate(node: &GpsNode, code: &str, s: &Session) -> Result<NodeOutput, Vec<Diagnostic>> {
    if code.trim().is_empty() {
        return Err(vec![Diagnostic::error(1, DiagnosticKind::Note, "the reply contained no program")]);
    }
    let trial = node.clone().with_code(code);
    execute_node(&trial, &s.cfg.exec).map_err(|e| e.diagnostics())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentConfig;
    use crate::gps::BoundingVolume;
    use crate::llm::{ChatRequest, FnBackend};
    use std::collections::HashMap;
    use std::sync::Mutex;

    fn one_node() -> GpsGraph {
        GpsGraph {
            root_summary: String::new(),
            nodes: vec![GpsNode::new("part", "a block", "centre").with_bounds(BoundingVolume::unit())],
        }
    }

    /// Coder replies carry a program tagged with the path and iteration so
    /// the Evaluator can look up its scripted score.
    fn scripted(scores: Vec<Vec<u8>>) -> FnBackend {
        let counters: Mutex<HashMap<usize, usize>> = Mutex::new(HashMap::new());
        let scores = scores.clone();
        FnBackend::new(move |r: &ChatRequest| {
            let last = &r.messages.last().unwrap().text;
            match r.agent {
                AgentRole::Coder => {
                    // Path index from the number of first-turn requests seen.
                    let mut c = counters.lock().unwrap();
                    let path = if r.messages.len() == 2 {
                        let p = c.len();
                        c.insert(p, 0);
                        p
                    } else {
                        let p: usize = last.split("P").nth(1).unwrap().split('T').next().unwrap().parse().unwrap();
                        *c.get_mut(&p).unwrap() += 1;
                        p
                    };
                    let t = c[&path];
                    Ok(format!("```dsl\n# P{path}T{t}\ncube(name=\"p{path}t{t}\")\n```"))
                }
                _ => {
                    let tag = last.split("# P").nth(1).unwrap();
                    let p: usize = tag.split('T').next().unwrap().parse().unwrap();
                    let t: usize = tag.split('T').nth(1).unwrap().split('\n').next().unwrap().parse().unwrap();
                    Ok(format!("{{\"score\": {}, \"feedback\": \"P{p}T{t} again\"}}", scores[p][t]))
                }
            }
        })
    }

    fn cfg(m: usize, t: usize, s_tau: u8) -> AgentConfig {
        AgentConfig { m, t, s_tau, image_size: 24, ..AgentConfig::default() }
    }

    #[test]
    fn early_stop_example() {
        let b = scripted(vec![vec![5, 9], vec![7, 8, 8]]);
        let s = Session::new(&b, cfg(2, 3, 9)).unwrap();
        let out = s.model_shape(one_node()).unwrap();
        assert_eq!(b.count(AgentRole::Evaluator), 5);
        assert_eq!(b.count(AgentRole::Coder), 5);
        assert_eq!(out.paths[0].scores, [5, 9]);
        assert!(out.paths[0].stopped_early);
        assert_eq!(out.paths[1].scores, [7, 8, 8]);
        assert_eq!(out.selected, [("part".to_string(), Some(1))]);
        assert!(out.graph.nodes[0].code.as_deref().unwrap().contains("P0T1"));
        assert_eq!(out.graph.nodes[0].best_score, Some(9));
    }

    #[test]
    fn minimal_loop() {
        let b = scripted(vec![vec![10]]);
        let s = Session::new(&b, cfg(1, 1, 9)).unwrap();
        s.model_shape(one_node()).unwrap();
        assert_eq!(b.count(AgentRole::Coder), 1);
        assert_eq!(b.count(AgentRole::Evaluator), 1);
        let r = &b.requests()[1];
        assert_eq!(r.image_count(), 4);
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let b = scripted(vec![vec![6, 7], vec![7, 6]]);
        let s = Session::new(&b, cfg(2, 2, 9)).unwrap();
        let out = s.model_shape(one_node()).unwrap();
        assert_eq!(out.selected[0].1, Some(1));
        assert!(out.graph.nodes[0].code.as_deref().unwrap().contains("P0T1"));
    }

    #[test]
    fn failures_score_zero_and_feed_diagnostics() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Coder if r.messages.len() == 2 => "```dsl\nbody = cube(\n```".into(),
                AgentRole::Coder => "```dsl\nbody = cube()\n```".into(),
                _ => r#"{"score": 9, "feedback": "good"}"#.into(),
            })
        });
        let s = Session::new(&b, cfg(1, 3, 9)).unwrap();
        let out = s.model_shape(one_node()).unwrap();
        assert_eq!(out.paths[0].scores, [0, 9]);
        assert_eq!(b.count(AgentRole::Evaluator), 1);
        let refine = &b.requests()[1];
        assert!(refine.messages.last().unwrap().text.contains("line 1: error:"));
    }

    #[test]
    fn all_zero_falls_back() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Coder => "```dsl\ntext(body=\"hi\")\n```".into(),
                _ => unreachable!(),
            })
        });
        let s = Session::new(&b, cfg(2, 2, 9)).unwrap();
        let out = s.model_shape(one_node()).unwrap();
        assert_eq!(out.selected[0].1, None);
        assert!(out.graph.nodes[0].uses_default_cube());
        assert_eq!(b.count(AgentRole::Coder), 4);
        assert!(s.warnings().iter().any(|w| w.contains("default cube")));
    }

    #[test]
    fn requires_bounds() {
        let b = FnBackend::new(|_| unreachable!());
        let s = Session::new(&b, cfg(1, 1, 9)).unwrap();
        let g = GpsGraph { root_summary: String::new(), nodes: vec![GpsNode::new("a", "", "")] };
        assert_eq!(s.model_shape(g), Err(AgentError::MissingBounds("a".into())));
    }
}
