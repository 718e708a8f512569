//! Prompt templates. `{{name}}` placeholders are filled by [`fill`].

pub const PARSER_SYSTEM: &str = include_str!("../../prompts/parser_system.txt");
pub const PARSE: &str = include_str!("../../prompts/parse.txt");
pub const PARSE_RETRY: &str = include_str!("../../prompts/parse_retry.txt");
pub const BOOTSTRAP_FEEDBACK: &str = include_str!("../../prompts/bootstrap_feedback.txt");
pub const BOOTSTRAP_UPDATE: &str = include_str!("../../prompts/bootstrap_update.txt");
pub const CODER_SYSTEM: &str = include_str!("../../prompts/coder_system.txt");
pub const BBOX: &str = include_str!("../../prompts/bbox.txt");
pub const BBOX_REFINE: &str = include_str!("../../prompts/bbox_refine.txt");
pub const NODE: &str = include_str!("../../prompts/node.txt");
pub const NODE_REFINE: &str = include_str!("../../prompts/node_refine.txt");
pub const EVALUATOR_SYSTEM: &str = include_str!("../../prompts/evaluator_system.txt");
pub const CRITERIA: &str = include_str!("../../prompts/criteria.txt");
pub const EVAL_BBOX: &str = include_str!("../../prompts/eval_bbox.txt");
pub const EVAL_NODE: &str = include_str!("../../prompts/eval_node.txt");
pub const EVAL_RETRY: &str = include_str!("../../prompts/eval_retry.txt");
pub const EDIT: &str = include_str!("../../prompts/edit.txt");
pub const VQA: &str = include_str!("../../prompts/vqa.txt");

/// Replaces each `{{key}}` with its value. Unknown placeholders are left
/// as they are.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// Criteria list for bounding boxes: all but the visual-quality line.
pub fn bbox_criteria() -> String {
    let lines: Vec<&str> = CRITERIA.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut s = lines[..lines.len() - 1].join("\n");
    s.push('\n');
    s
}

pub fn node_criteria() -> String {
    CRITERIA.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placeholders(t: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut rest = t;
        while let Some(a) = rest.find("{{") {
            let Some(b) = rest[a..].find("}}") else { break };
            out.push(rest[a + 2..a + b].to_string());
            rest = &rest[a + b + 2..];
        }
        out
    }

    #[test]
    fn fill_replaces_all() {
        assert_eq!(fill("a {{x}} b {{x}} {{y}}", &[("x", "1")]), "a 1 b 1 {{y}}");
    }

    #[test]
    fn templates_use_known_keys() {
        let known = [
            "shape", "diagnostics", "legend", "feedback", "overview", "node", "geometric", "positional",
            "library", "color", "program", "criteria", "problem", "programs", "instruction", "question",
        ];
        for t in [
            PARSE, PARSE_RETRY, BOOTSTRAP_FEEDBACK, BOOTSTRAP_UPDATE, BBOX, BBOX_REFINE, NODE, NODE_REFINE,
            EVAL_BBOX, EVAL_NODE, EVAL_RETRY, EDIT, VQA,
        ] {
            for p in placeholders(t) {
                assert!(known.contains(&p.as_str()), "unknown placeholder {p}");
            }
        }
    }

    #[test]
    fn criteria_counts() {
        assert_eq!(bbox_criteria().lines().count(), 4);
        assert_eq!(node_criteria().lines().count(), 5);
        assert!(!bbox_criteria().contains("Visual quality"));
    }
}
