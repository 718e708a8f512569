use crate::gps::{graph_overview, BoundingVolume, GpsGraph, GpsNode};
use crate::llm::{AgentRole, ChatMessage};
use crate::program::builtins::{lookup, BuiltinGroup};
use crate::program::{parse, render_diagnostics, run_source, Diagnostic, DiagnosticKind};
use crate::render::{encode_png, legend_text, preset_cameras, render_bboxes};

use super::prompts::{self, fill};
use super::{extract_program, AgentError, EvalReport, Session};

/// Runs a bounding-box program and returns the box of its single object.
pub fn bbox_from_program(code: &str, max_statements: usize) -> Result<BoundingVolume, Vec<Diagnostic>> {
    if code.trim().is_empty() {
        return Err(vec![Diagnostic::error(1, DiagnosticKind::Note, "the reply contained no program")]);
    }
    let scene = run_source(code, max_statements)?;
    let solids: Vec<_> = scene.solid_objects().collect();
    let last_line = code.lines().count().max(1);
    match solids.len() {
        0 => Err(vec![Diagnostic::error(
            last_line,
            DiagnosticKind::Note,
            "the program created no bounding box",
        )]),
        1 => {
            let aabb = solids[0].1.aabb().expect("solid objects have vertices");
            BoundingVolume::from_aabb(&aabb).map_err(|e| vec![Diagnostic::error(last_line, DiagnosticKind::Note, e)])
        }
        n => {
            // Point at the call that created the second object.
            let line = parse(code)
                .ok()
                .and_then(|p| {
                    p.statements
                        .iter()
                        .filter(|s| {
                            lookup(&s.callee).is_some_and(|b| {
                                matches!(
                                    b.group,
                                    BuiltinGroup::Primitive(_) | BuiltinGroup::Curve(_) | BuiltinGroup::BoundingBox
                                )
                            })
                        })
                        .nth(1)
                        .map(|s| s.line)
                })
                .unwrap_or(last_line);
            Err(vec![Diagnostic::error(
                line,
                DiagnosticKind::Note,
                format!("only one bounding box may be created per part, but this program creates {n}"),
            )])
        }
    }
}

/// A node's refine conversation and current program.
struct Draft {
    messages: Vec<ChatMessage>,
    code: String,
}

impl Session<'_> {
    /// Gives every node (or only `only`) numeric bounds: one Coder program
    /// per node, then a single-path refine loop scored on box renders.
    pub fn generate_bboxes(&self, graph: GpsGraph, shape: &str, only: Option<&[String]>) -> Result<GpsGraph, AgentError> {
        let mut graph = graph;
        let targets: Vec<usize> = (0..graph.nodes.len())
            .filter(|&i| only.is_none_or(|o| o.contains(&graph.nodes[i].name)))
            .collect();
        if targets.is_empty() {
            return Ok(graph);
        }
        let overview = graph_overview(&graph);

        // Phase A: all first drafts.
        let first = |i: usize| -> Result<Draft, AgentError> {
            let node = &graph.nodes[i];
            let mut messages = vec![
                ChatMessage::system(prompts::CODER_SYSTEM),
                ChatMessage::user(fill(
                    prompts::BBOX,
                    &[
                        ("shape", shape.trim()),
                        ("overview", &overview),
                        ("node", &node.name),
                        ("geometric", &node.geometric_desc),
                        ("positional", &node.positional_desc),
                    ],
                )),
            ];
            let reply = self.call(AgentRole::Coder, &messages)?;
            let code = extract_program(self, &reply, &format!("{} bbox", node.name));
            messages.push(ChatMessage::assistant(reply));
            Ok(Draft { messages, code })
        };
        let drafts: Vec<Draft> = self.map_nodes(&targets, first)?;

        // Snapshot with every first draft that runs, so each box is judged
        // next to the others.
        let mut snapshot = graph.clone();
        for (&i, d) in targets.iter().zip(&drafts) {
            if let Ok(b) = bbox_from_program(&d.code, self.cfg.exec.max_statements) {
                snapshot.nodes[i].bounds = Some(b);
            }
        }

        // Phase B: refine each node against the snapshot.
        let slots: Vec<std::sync::Mutex<Option<Draft>>> =
            drafts.into_iter().map(|d| std::sync::Mutex::new(Some(d))).collect();
        let refine = |k: usize| -> Result<BoundingVolume, AgentError> {
            let draft = slots[k].lock().expect("draft lock").take().expect("each draft is used once");
            self.refine_bbox(&snapshot, targets[k], draft, shape)
        };
        let positions: Vec<usize> = (0..targets.len()).collect();
        let bounds = self.map_nodes(&positions, refine)?;
        for (&i, b) in targets.iter().zip(bounds) {
            graph.nodes[i].bounds = Some(b);
        }
        Ok(graph)
    }

    /// Runs `f` over `items` concurrently when the backend allows it,
    /// otherwise in order; results keep the order of `items` and the first
    /// error (in that order) wins.
    pub(crate) fn map_nodes<T: Send>(
        &self,
        items: &[usize],
        f: impl Fn(usize) -> Result<T, AgentError> + Sync,
    ) -> Result<Vec<T>, AgentError> {
        if !self.parallel() || items.len() < 2 {
            return items.iter().map(|&i| f(i)).collect();
        }
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = items.iter().map(|&i| s.spawn(move || f(i))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("agent worker does not panic"))
                .collect()
        })
    }

    fn refine_bbox(&self, snapshot: &GpsGraph, i: usize, mut draft: Draft, shape: &str) -> Result<BoundingVolume, AgentError> {
        let node = &snapshot.nodes[i];
        let t_max = self.cfg.bbox_iterations;
        let mut best: Option<(u8, BoundingVolume)> = None;
        let mut first_valid: Option<BoundingVolume> = None;
        for t in 0..t_max {
            let dir = format!("bbox/{}/iter{t}", node.name);
            self.write_artifact(&format!("{dir}/program.dsl"), draft.code.as_bytes());
            let (report, valid) = match bbox_from_program(&draft.code, self.cfg.exec.max_statements) {
                Err(diags) => (
                    EvalReport {
                        score: 0,
                        feedback: format!("The program could not be used:\n{}", render_diagnostics(&diags)),
                    },
                    None,
                ),
                Ok(b) => {
                    first_valid.get_or_insert(b);
                    (self.judge_bbox(snapshot, node, b, &draft.code, shape, &dir)?, Some(b))
                }
            };
            self.write_artifact(&format!("{dir}/eval.json"), eval_json(&report).as_bytes());
            if let Some(b) = valid {
                if report.score > best.map_or(0, |(s, _)| s) {
                    best = Some((report.score, b));
                }
            }
            if report.score >= self.cfg.s_tau {
                break;
            }
            if t + 1 < t_max {
                draft.messages.push(ChatMessage::user(fill(
                    prompts::BBOX_REFINE,
                    &[("feedback", report.feedback.trim()), ("node", &node.name)],
                )));
                let reply = self.call(AgentRole::Coder, &draft.messages)?;
                draft.code = extract_program(self, &reply, &format!("{} bbox", node.name));
                draft.messages.push(ChatMessage::assistant(reply));
            }
        }
        Ok(match (best, first_valid) {
            (Some((_, b)), _) => b,
            (None, Some(b)) => {
                self.warn(format!("{}: no bounding box scored above 0; keeping the first valid one", node.name));
                b
            }
            (None, None) => {
                self.warn(format!(
                    "{}: no usable bounding box after {t_max} attempts; using a unit box at the origin",
                    node.name
                ));
                BoundingVolume::unit()
            }
        })
    }

    fn judge_bbox(
        &self,
        snapshot: &GpsGraph,
        node: &GpsNode,
        b: BoundingVolume,
        code: &str,
        shape: &str,
        dir: &str,
    ) -> Result<EvalReport, AgentError> {
        let mut view = snapshot.clone();
        view.nodes.retain(|n| n.bounds.is_some() || n.name == node.name);
        view.node_mut(&node.name).expect("node is in the snapshot").bounds = Some(b);
        let mut images = Vec::new();
        let mut legend = Vec::new();
        for cam in preset_cameras() {
            let (img, l) = render_bboxes(&view, &cam, self.cfg.image_size)?;
            let png = encode_png(&img);
            if self.has_artifacts() {
                self.write_artifact(&format!("{dir}/render_{}.png", cam.name), &png);
            }
            images.push(png);
            legend = l;
        }
        let color = legend
            .iter()
            .find(|e| e.node == node.name)
            .map(|e| e.color_name.clone())
            .unwrap_or_default();
        let context = fill(
            prompts::EVAL_BBOX,
            &[
                ("shape", shape.trim()),
                ("legend", &legend_text(&legend)),
                ("node", &node.name),
                ("color", &color),
                ("geometric", &node.geometric_desc),
                ("positional", &node.positional_desc),
                ("program", code),
                ("criteria", &prompts::bbox_criteria()),
            ],
        );
        self.evaluate(images, &context)
    }
}

pub(crate) fn eval_json(r: &EvalReport) -> String {
    serde_json::to_string_pretty(r).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentConfig;
    use crate::geometry::Vec3;
    use crate::llm::FnBackend;

    fn graph(names: &[&str]) -> GpsGraph {
        GpsGraph {
            root_summary: String::new(),
            nodes: names.iter().map(|n| GpsNode::new(n, "a part", "somewhere")).collect(),
        }
    }

    fn cfg() -> AgentConfig {
        AgentConfig { image_size: 32, ..AgentConfig::default() }
    }

    #[test]
    fn program_to_bounds() {
        let b = bbox_from_program(
            "seat_bbox = cube_bounding_box(name=\"seat_bbox\", position=(0,0,0.5), scale=(1,1,0.1))",
            1000,
        )
        .unwrap();
        assert!((b.center - Vec3::new(0.0, 0.0, 0.5)).length() < 1e-12);
        assert!((b.size - Vec3::new(2.0, 2.0, 0.2)).length() < 1e-12);
    }

    #[test]
    fn two_boxes_rejected() {
        let e = bbox_from_program(
            "a = cube_bounding_box(name=\"a\", position=(0,0,0), scale=(1,1,1))\nb = cube_bounding_box(name=\"b\", position=(3,0,0), scale=(1,1,1))",
            1000,
        )
        .unwrap_err();
        assert_eq!(e[0].line, 2);
        assert!(e[0].message.contains("only one bounding box"));
    }

    fn bbox_reply(name: &str) -> String {
        format!("```dsl\n{name}_bbox = cube_bounding_box(name=\"{name}_bbox\", position=(0,0,0), scale=(1,1,1))\n```")
    }

    #[test]
    fn happy_path_call_counts() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Coder => {
                    let t = &r.messages[1].text;
                    let name = ["leg", "seat", "back"].into_iter().find(|n| t.contains(&format!("part `{n}`"))).unwrap();
                    bbox_reply(name)
                }
                _ => r#"{"score": 9, "feedback": "good"}"#.into(),
            })
        });
        let s = Session::new(&b, cfg()).unwrap();
        let g = s.generate_bboxes(graph(&["leg", "seat", "back"]), "chair", None).unwrap();
        assert!(g.all_bounded());
        let roles: Vec<AgentRole> = b.requests().iter().map(|r| r.agent).collect();
        assert_eq!(&roles[..3], &[AgentRole::Coder; 3]);
        assert_eq!(&roles[3..], &[AgentRole::Evaluator; 3]);
    }

    #[test]
    fn single_box_rule_fed_back() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Coder if r.messages.len() == 2 => "```dsl\ncube_bounding_box(name=\"a\")\ncube_bounding_box(name=\"b\", position=(2,0,0))\n```".into(),
                AgentRole::Coder => bbox_reply("a"),
                _ => r#"{"score": 10, "feedback": "ok"}"#.into(),
            })
        });
        let s = Session::new(&b, cfg()).unwrap();
        let g = s.generate_bboxes(graph(&["a"]), "thing", None).unwrap();
        assert_eq!(g.nodes[0].bounds.unwrap().size, Vec3::splat(2.0));
        let refine = &b.requests()[1];
        assert_eq!(refine.agent, AgentRole::Coder);
        assert!(refine.messages.last().unwrap().text.contains("line 2: error: only one bounding box"));
        assert_eq!(b.count(AgentRole::Evaluator), 1);
    }

    #[test]
    fn fallback_to_unit() {
        let b = FnBackend::new(|_| Ok("```dsl\nsphere(\n```".into()));
        let s = Session::new(&b, cfg()).unwrap();
        let g = s.generate_bboxes(graph(&["a"]), "thing", None).unwrap();
        assert_eq!(g.nodes[0].bounds, Some(BoundingVolume::unit()));
        assert_eq!(b.count(AgentRole::Coder), 3);
        assert_eq!(b.count(AgentRole::Evaluator), 0);
        assert!(s.warnings().iter().any(|w| w.contains("unit box")));
    }

    #[test]
    fn subset_only() {
        let b = FnBackend::new(|r| {
            Ok(match r.agent {
                AgentRole::Coder => bbox_reply("b"),
                _ => r#"{"score": 9, "feedback": "good"}"#.into(),
            })
        });
        let s = Session::new(&b, cfg()).unwrap();
        let mut g = graph(&["a", "b"]);
        g.nodes[0].bounds = Some(BoundingVolume::new(Vec3::splat(5.0), Vec3::splat(1.0)).unwrap());
        let out = s.generate_bboxes(g.clone(), "thing", Some(&["b".to_string()])).unwrap();
        assert_eq!(out.nodes[0].bounds, g.nodes[0].bounds);
        assert!(out.nodes[1].bounds.is_some());
        assert_eq!(b.count(AgentRole::Coder), 1);
    }
}
