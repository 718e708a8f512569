use crate::executor::execute_node;
use crate::gps::{graph_overview, GpsGraph};
use crate::llm::{extract_code_block, AgentRole, ChatMessage};
use crate::program::{library_reference, Diagnostic};

use super::prompts::{self, fill};
use super::{AgentError, Session};

#[derive(Debug, Clone, PartialEq)]
pub struct EditOutcome {
    pub graph: GpsGraph,
    /// Nodes whose program was replaced.
    pub changed: Vec<String>,
    /// Nodes whose new program failed; they keep the old one.
    pub failures: Vec<(String, Vec<Diagnostic>)>,
}

/// `## name` sections of an edit reply, each with the body of its first
/// fenced block.
pub fn read_edit_reply(reply: &str) -> (Vec<(String, String)>, Vec<String>) {
    let mut sections: Vec<(String, String)> = Vec::new();
    for line in reply.lines() {
        if let Some(h) = line.trim_start().strip_prefix("## ") {
            let name = h.trim().trim_matches('`').trim().to_string();
            sections.push((name, String::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut notes = Vec::new();
    let mut out = Vec::new();
    for (name, body) in sections {
        let (code, warning) = extract_code_block(&body, Some("dsl"));
        match warning {
            Some(w) if w.contains("no fenced") => notes.push(format!("section '{name}' has no code block; ignored")),
            Some(w) => {
                notes.push(format!("section '{name}': {w}"));
                out.push((name, code));
            }
            None => out.push((name, code)),
        }
    }
    (out, notes)
}

impl Session<'_> {
    /// Applies a free-text change request by letting the Coder rewrite the
    /// programs of the affected nodes.
    pub fn edit_shape(&self, graph: GpsGraph, instruction: &str) -> Result<EditOutcome, AgentError> {
        if instruction.trim().is_empty() {
            return Err(AgentError::EmptyPrompt);
        }
        if graph.nodes.iter().all(|n| n.uses_default_cube()) {
            return Err(AgentError::NoCode);
        }
        let mut programs = String::new();
        for n in &graph.nodes {
            programs.push_str(&format!("## {}\n", n.name));
            match n.code.as_deref().filter(|c| !c.trim().is_empty()) {
                Some(c) => {
                    programs.push_str("```dsl\n");
                    programs.push_str(c);
                    if !c.ends_with('\n') {
                        programs.push('\n');
                    }
                    programs.push_str("```\n\n");
                }
                None => programs.push_str("(no program: the part is a plain box filling its bounds)\n\n"),
            }
        }
        let ask = fill(
            prompts::EDIT,
            &[
                ("overview", &graph_overview(&graph)),
                ("programs", &programs),
                ("instruction", instruction.trim()),
                ("library", &library_reference(false)),
            ],
        );
        let reply = self.call(
            AgentRole::Coder,
            &[ChatMessage::system(prompts::CODER_SYSTEM), ChatMessage::user(ask)],
        )?;
        let (sections, notes) = read_edit_reply(&reply);
        for n in notes {
            self.warn(format!("edit reply: {n}"));
        }
        let mut out = EditOutcome {
            graph,
            changed: Vec::new(),
            failures: Vec::new(),
        };
        for (name, code) in sections {
            let Some(node) = out.graph.node_mut(&name) else {
                self.warn(format!("edit reply names unknown part '{name}'; ignored"));
                continue;
            };
            if node.code.as_deref().map(str::trim) == Some(code.trim()) {
                continue;
            }
            let trial = node.clone().with_code(&code);
            let ok = if code.trim().is_empty() {
                Err(vec![Diagnostic::error(1, crate::program::DiagnosticKind::Note, "the new program is empty")])
            } else {
                execute_node(&trial, &self.cfg.exec).map_err(|e| e.diagnostics())
            };
            match ok {
                Ok(_) => {
                    *node = trial;
                    node.best_score = None;
                    out.changed.push(name);
                }
                Err(d) => out.failures.push((name, d)),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentConfig;
    use crate::gps::{BoundingVolume, GpsNode};
    use crate::llm::FnBackend;

    fn graph() -> GpsGraph {
        let mut g = GpsGraph::default();
        for n in ["a", "b", "c"] {
            g.nodes.push(
                GpsNode::new(n, "block", "here")
                    .with_bounds(BoundingVolume::unit())
                    .with_code(&format!("{n} = cube()\n")),
            );
        }
        g
    }

    fn run(reply: &'static str) -> (EditOutcome, FnBackend) {
        let b = FnBackend::new(move |_| Ok(reply.into()));
        let s = Session::new(&b, AgentConfig::default()).unwrap();
        (s.edit_shape(graph(), "make it different").unwrap(), b)
    }

    #[test]
    fn no_change() {
        let (o, b) = run("## a\n```dsl\na = cube()\n```\n## b\n```dsl\nb = cube()\n```\n");
        assert_eq!(o.graph, graph());
        assert!(o.changed.is_empty());
        assert_eq!(b.requests().len(), 1);
        assert!(b.requests()[0].messages[1].text.contains("## c\n```dsl\nc = cube()\n```"));
    }

    #[test]
    fn one_node_changes() {
        let (o, _) = run("Sure.\n\n## `b`\n```dsl\nb = sphere()\n```\n");
        assert_eq!(o.changed, ["b"]);
        let before = graph();
        let differing: Vec<_> = o.graph.nodes.iter().zip(&before.nodes).filter(|(x, y)| x.code != y.code).collect();
        assert_eq!(differing.len(), 1);
        assert_eq!(o.graph.nodes[1].code.as_deref(), Some("b = sphere()\n"));
    }

    #[test]
    fn failing_edit_keeps_code() {
        let (o, _) = run("## c\n```dsl\nc = cube(size=\n```\n");
        assert_eq!(o.graph, graph());
        assert_eq!(o.failures.len(), 1);
        assert!(o.failures[0].1[0].to_string().starts_with("line 1: error:"));
    }

    #[test]
    fn needs_code() {
        let b = FnBackend::new(|_| unreachable!());
        let s = Session::new(&b, AgentConfig::default()).unwrap();
        let mut g = graph();
        for n in &mut g.nodes {
            n.code = None;
        }
        assert_eq!(s.edit_shape(g, "x"), Err(AgentError::NoCode));
    }
}
