//! The GPS graph: a virtual root plus a flat list of component nodes, and
//! its `.gps.jsonl` file format.
//!
//! Each node line carries `node`, `shape_description` and `bounding_volume`,
//! plus optional `bounds` (`[cx, cy, cz, l, w, h]`, `l` along x, `w` along y,
//! `h` along z), `code` and `best_score`. A `{"root_summary": ...}` line, if
//! present, holds the root's summary.

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec3};
use crate::program::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingVolume {
    pub center: Vec3,
    /// Full extents along x, y, z.
    pub size: Vec3,
}

impl BoundingVolume {
    pub fn new(center: Vec3, size: Vec3) -> Result<Self, String> {
        let b = Self { center, size };
        b.validate()?;
        Ok(b)
    }

    /// Side-1 cube at the origin, used when no usable bound was produced.
    pub fn unit() -> Self {
        Self {
            center: Vec3::ZERO,
            size: Vec3::ONE,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.center.is_finite() {
            return Err("bounding volume center must be finite".into());
        }
        let s = self.size;
        if !(s.is_finite() && s.x > 0.0 && s.y > 0.0 && s.z > 0.0) {
            return Err(format!(
                "bounding volume extents must be positive and finite, got ({}, {}, {})",
                s.x, s.y, s.z
            ));
        }
        Ok(())
    }

    pub fn from_aabb(b: &Aabb) -> Result<Self, String> {
        Self::new(b.center(), b.extent())
    }

    pub fn aabb(&self) -> Aabb {
        let h = self.size * 0.5;
        Aabb::new(self.center - h, self.center + h)
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.size * 0.5
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (c, s) = (self.center, self.size);
        [c.x, c.y, c.z, s.x, s.y, s.z]
    }

    pub fn from_array(a: [f64; 6]) -> Result<Self, String> {
        Self::new(Vec3::new(a[0], a[1], a[2]), Vec3::new(a[3], a[4], a[5]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsNode {
    pub name: String,
    pub geometric_desc: String,
    pub positional_desc: String,
    pub bounds: Option<BoundingVolume>,
    pub code: Option<String>,
    pub best_score: Option<u8>,
}

impl GpsNode {
    pub fn new(name: &str, geometric_desc: &str, positional_desc: &str) -> Self {
        Self {
            name: name.to_string(),
            geometric_desc: geometric_desc.to_string(),
            positional_desc: positional_desc.to_string(),
            bounds: None,
            code: None,
            best_score: None,
        }
    }

    pub fn with_bounds(mut self, b: BoundingVolume) -> Self {
        self.bounds = Some(b);
        self
    }

    pub fn with_code(mut self, code: &str) -> Self {
        self.code = Some(code.to_string());
        self
    }

    /// True when the node has no program and falls back to the default cube.
    pub fn uses_default_cube(&self) -> bool {
        self.code.as_deref().is_none_or(|c| c.trim().is_empty())
    }

    /// Same descriptions (what the parser decides), ignoring bounds, code
    /// and score.
    pub fn same_description(&self, other: &GpsNode) -> bool {
        self.name == other.name
            && self.geometric_desc == other.geometric_desc
            && self.positional_desc == other.positional_desc
    }
}

/// A virtual root with a flat list of children; nodes have no edges among
/// themselves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GpsGraph {
    pub root_summary: String,
    pub nodes: Vec<GpsNode>,
}

impl GpsGraph {
    pub fn node(&self, name: &str) -> Option<&GpsNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut GpsNode> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    pub fn all_bounded(&self) -> bool {
        self.nodes.iter().all(|n| n.bounds.is_some())
    }
}

/// Lowercase letters, digits and underscores, not starting with a digit.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Serialize)]
struct NodeLine<'a> {
    node: &'a str,
    shape_description: &'a str,
    bounding_volume: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<[f64; 6]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    code: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_score: Option<u8>,
}

pub fn serialize_graph(graph: &GpsGraph) -> String {
    let mut out = String::new();
    if !graph.root_summary.is_empty() {
        out.push_str(&serde_json::json!({ "root_summary": graph.root_summary }).to_string());
        out.push('\n');
    }
    for n in &graph.nodes {
        let line = NodeLine {
            node: &n.name,
            shape_description: &n.geometric_desc,
            bounding_volume: &n.positional_desc,
            bounds: n.bounds.map(|b| b.to_array()),
            code: n.code.as_deref(),
            best_score: n.best_score,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

const KNOWN_KEYS: &[&str] = &[
    "node",
    "shape_description",
    "bounding_volume",
    "bounds",
    "code",
    "best_score",
];

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte.min(text.len())].matches('\n').count() + 1
}

/// Drops a surrounding ``` fence. Text outside the fence is ignored.
fn strip_fence(text: &str) -> &str {
    let trimmed = text.trim_start();
    if !trimmed.starts_with("```") {
        return text;
    }
    let Some(nl) = trimmed.find('\n') else { return "" };
    let body = &trimmed[nl + 1..];
    match body.find("\n```").or_else(|| body.starts_with("```").then_some(0)) {
        Some(end) => &body[..end],
        None => body,
    }
}

/// Parses graph JSONL. Objects may span several lines. On success the
/// warnings (unknown keys and the like) are returned with the graph.
pub fn parse_graph_jsonl(text: &str) -> Result<(GpsGraph, Vec<Diagnostic>), Vec<Diagnostic>> {
    let body = strip_fence(text);
    // Line numbers refer to the fenced body.
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut graph = GpsGraph::default();

    let mut stream = serde_json::Deserializer::from_str(body).into_iter::<serde_json::Value>();
    loop {
        let before = stream.byte_offset();
        let rest = &body[before..];
        let start = before + rest.len() - rest.trim_start().len();
        let line = line_of(body, start);
        let value = match stream.next() {
            None => break,
            Some(Ok(v)) => v,
            Some(Err(e)) => {
                errors.push(Diagnostic::error(
                    e.line().max(1),
                    DiagnosticKind::Syntax,
                    format!("malformed JSON: {e}"),
                ));
                break;
            }
        };
        let serde_json::Value::Object(obj) = value else {
            errors.push(Diagnostic::error(line, DiagnosticKind::Syntax, "expected a JSON object"));
            continue;
        };
        if obj.contains_key("root_summary") && !obj.contains_key("node") {
            match obj.get("root_summary") {
                Some(serde_json::Value::String(s)) => graph.root_summary = s.clone(),
                _ => errors.push(Diagnostic::error(line, DiagnosticKind::Syntax, "root_summary must be a string")),
            }
            continue;
        }
        for k in obj.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                warnings.push(Diagnostic::warning(line, format!("unknown key '{k}' ignored")));
            }
        }
        let text_field = |key: &str| -> Option<String> {
            match obj.get(key) {
                Some(serde_json::Value::String(s)) => Some(s.clone()),
                Some(serde_json::Value::Null) | None => None,
                Some(other) => Some(other.to_string()),
            }
        };
        let Some(name) = text_field("node") else {
            errors.push(Diagnostic::error(line, DiagnosticKind::Syntax, "missing key 'node'"));
            continue;
        };
        if !is_valid_name(&name) {
            errors.push(Diagnostic::error(
                line,
                DiagnosticKind::Syntax,
                format!(
                    "node name '{name}' is not a valid identifier (lowercase letters, digits and underscores, not starting with a digit)"
                ),
            ));
            continue;
        }
        if graph.node(&name).is_some() {
            errors.push(Diagnostic::error(
                line,
                DiagnosticKind::Syntax,
                format!("duplicate node name '{name}'"),
            ));
            continue;
        }
        let mut node = GpsNode::new(
            &name,
            &text_field("shape_description").unwrap_or_default(),
            &text_field("bounding_volume").unwrap_or_default(),
        );
        if node.geometric_desc.is_empty() {
            warnings.push(Diagnostic::warning(line, format!("node '{name}' has no shape_description")));
        }
        if let Some(b) = obj.get("bounds") {
            let arr: Option<Vec<f64>> = b.as_array().and_then(|a| a.iter().map(|v| v.as_f64()).collect());
            match arr.as_deref().map(<[f64; 6]>::try_from) {
                Some(Ok(a)) => match BoundingVolume::from_array(a) {
                    Ok(bv) => node.bounds = Some(bv),
                    Err(e) => errors.push(Diagnostic::error(line, DiagnosticKind::Syntax, format!("node '{name}': {e}"))),
                },
                _ => errors.push(Diagnostic::error(
                    line,
                    DiagnosticKind::Syntax,
                    format!("node '{name}': bounds must be an array of 6 numbers"),
                )),
            }
        }
        match obj.get("code") {
            Some(serde_json::Value::String(c)) => node.code = Some(c.clone()),
            None | Some(serde_json::Value::Null) => {}
            Some(_) => errors.push(Diagnostic::error(line, DiagnosticKind::Syntax, format!("node '{name}': code must be a string"))),
        }
        match obj.get("best_score") {
            None | Some(serde_json::Value::Null) => {}
            Some(v) => match v.as_u64() {
                Some(s) if s <= 10 => node.best_score = Some(s as u8),
                _ => errors.push(Diagnostic::error(
                    line,
                    DiagnosticKind::Syntax,
                    format!("node '{name}': best_score must be an integer from 0 to 10"),
                )),
            },
        }
        graph.nodes.push(node);
    }
    if errors.is_empty() && graph.nodes.is_empty() {
        errors.push(Diagnostic::error(1, DiagnosticKind::Syntax, "no nodes"));
    }
    if errors.is_empty() {
        Ok((graph, warnings))
    } else {
        Err(errors)
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Deterministic text digest of the graph for agent prompts.
pub fn graph_overview(graph: &GpsGraph) -> String {
    let mut out = String::new();
    if !graph.root_summary.is_empty() {
        out.push_str(&format!("Object: {}\n", graph.root_summary));
    }
    out.push_str(&format!("Components ({}):\n", graph.nodes.len()));
    for n in &graph.nodes {
        out.push_str(&format!("- {}: {}\n", n.name, n.geometric_desc));
        out.push_str(&format!("  placement: {}\n", n.positional_desc));
        if let Some(b) = n.bounds {
            let (c, s) = (b.center, b.size);
            out.push_str(&format!(
                "  bounds: center ({}, {}, {}), size ({}, {}, {})\n",
                fmt_num(c.x),
                fmt_num(c.y),
                fmt_num(c.z),
                fmt_num(s.x),
                fmt_num(s.y),
                fmt_num(s.z)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GpsGraph {
        GpsGraph {
            root_summary: "chair".into(),
            nodes: vec![
                GpsNode::new("backrest", "curved slab", "upper rear of chair"),
                GpsNode::new("leg", "four thin posts", "corners under the seat")
                    .with_bounds(BoundingVolume::new(Vec3::new(0.0, 0.0, 0.25), Vec3::new(1.0, 1.0, 0.5)).unwrap())
                    .with_code("cube()\n"),
            ],
        }
    }

    #[test]
    fn single_line() {
        let (g, w) = parse_graph_jsonl(
            r#"{"node":"backrest","shape_description":"curved slab","bounding_volume":"upper rear of chair"}"#,
        )
        .unwrap();
        assert!(w.is_empty());
        assert_eq!(g.names(), vec!["backrest"]);
        assert_eq!(g.nodes[0].positional_desc, "upper rear of chair");
        assert!(g.nodes[0].bounds.is_none() && g.nodes[0].code.is_none());
    }

    #[test]
    fn errors() {
        let e = parse_graph_jsonl("").unwrap_err();
        assert_eq!(e[0].message, "no nodes");
        let e = parse_graph_jsonl(
            "{\"node\":\"leg\",\"shape_description\":\"a\",\"bounding_volume\":\"b\"}\n{\"node\":\"leg\",\"shape_description\":\"c\",\"bounding_volume\":\"d\"}\n",
        )
        .unwrap_err();
        assert_eq!(e[0].line, 2);
        assert!(e[0].message.contains("duplicate node name 'leg'"));
        let e = parse_graph_jsonl("{\"node\":\"Back Rest\"}").unwrap_err();
        assert!(e[0].message.contains("not a valid identifier"));
        let e = parse_graph_jsonl("{\"node\":\"a\"}\n{\"node\": \"b\",, }").unwrap_err();
        assert_eq!(e[0].line, 2);
        assert!(e[0].message.starts_with("malformed JSON"));
    }

    #[test]
    fn fenced_multiline_and_unknown_keys() {
        let text = "```jsonl\n{\"node\": \"seat\",\n\"shape_description\": \"slab\",\n\"bounding_volume\": \"middle\"\n}\n{\"node\": \"leg\", \"shape_description\": \"post\", \"bounding_volume\": \"below\", \"colour\": \"red\"}\n```\n";
        let (g, w) = parse_graph_jsonl(text).unwrap();
        assert_eq!(g.names(), vec!["seat", "leg"]);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].line, 5);
    }

    #[test]
    fn round_trip() {
        let g = sample();
        let text = serialize_graph(&g);
        assert_eq!(text.lines().count(), 3);
        let (back, _) = parse_graph_jsonl(&text).unwrap();
        assert_eq!(back, g);
        assert!(text.lines().nth(2).unwrap().contains("\"bounds\":[0.0,0.0,0.25,1.0,1.0,0.5]"));
    }

    #[test]
    fn twelve_nodes_keep_order() {
        let g = GpsGraph {
            root_summary: String::new(),
            nodes: (0..12).map(|i| GpsNode::new(&format!("part_{i}"), "x", "y")).collect(),
        };
        let text = serialize_graph(&g);
        assert_eq!(text.lines().count(), 12);
        assert_eq!(parse_graph_jsonl(&text).unwrap().0, g);
    }

    #[test]
    fn overview() {
        let g = sample();
        let a = graph_overview(&g);
        assert_eq!(a, graph_overview(&g));
        assert_eq!(a.matches("backrest").count(), 1);
        let mut h = g.clone();
        h.nodes[1].bounds = None;
        let b = graph_overview(&h);
        let diff: Vec<_> = a.lines().filter(|l| !b.lines().any(|m| m == *l)).collect();
        assert_eq!(diff, vec!["  bounds: center (0.000, 0.000, 0.250), size (1.000, 1.000, 0.500)"]);
    }

    #[test]
    fn names() {
        for ok in ["leg", "_x", "front_leg_2"] {
            assert!(is_valid_name(ok));
        }
        for bad in ["", "2leg", "Leg", "front leg", "leg-1"] {
            assert!(!is_valid_name(bad));
        }
    }
}
