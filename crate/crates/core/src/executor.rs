//! Runs node programs, fits their output into the node bounds and
//! assembles the whole shape.

use crate::geometry::{primitives, Aabb, KernelError, Mesh, Vec3};
use crate::gps::{BoundingVolume, GpsGraph, GpsNode};
use crate::program::{run_source, Diagnostic, DiagnosticKind, DEFAULT_STATEMENT_BUDGET};

/// Below this a mesh axis is treated as flat.
const FLAT_EXTENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("node '{0}' has no bounding volume")]
    MissingBounds(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("node '{node}' program failed:\n{}", crate::program::render_diagnostics(.diagnostics))]
    Program { node: String, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl ExecError {
    /// Diagnostics to feed back to the Coder.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            ExecError::Program { diagnostics, .. } => diagnostics.clone(),
            other => vec![Diagnostic::error(1, DiagnosticKind::Note, other.to_string())],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecOptions {
    /// Uniform scale centred in the bounds instead of exact per-axis fill.
    pub uniform_fit: bool,
    pub max_statements: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            uniform_fit: false,
            max_statements: DEFAULT_STATEMENT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeOutput {
    pub mesh: Mesh,
    pub warnings: Vec<Diagnostic>,
}

/// Maps the mesh bounds onto `b` axis by axis. Flat axes keep scale 1 and
/// are centred.
pub fn fit_to_bounds(mesh: &Mesh, b: &BoundingVolume) -> Result<Mesh, KernelError> {
    fit(mesh, b, false)
}

/// One scale factor for all axes (the smallest that fits), centred in `b`.
pub fn fit_uniform(mesh: &Mesh, b: &BoundingVolume) -> Result<Mesh, KernelError> {
    fit(mesh, b, true)
}

fn fit(mesh: &Mesh, b: &BoundingVolume, uniform: bool) -> Result<Mesh, KernelError> {
    let src = mesh.aabb()?;
    let ext = src.extent();
    let (bmin, bc) = (b.min(), b.center);
    let flat = [0, 1, 2].map(|a| ext.get(a) <= FLAT_EXTENT);
    let uniform_scale = (0..3)
        .filter(|&a| !flat[a])
        .map(|a| b.size.get(a) / ext.get(a))
        .fold(f64::INFINITY, f64::min);
    let map_axis = |a: usize, v: f64| -> f64 {
        if flat[a] {
            v - src.center().get(a) + bc.get(a)
        } else if uniform {
            (v - src.center().get(a)) * uniform_scale + bc.get(a)
        } else {
            (v - src.min.get(a)) * (b.size.get(a) / ext.get(a)) + bmin.get(a)
        }
    };
    let map = |p: Vec3| Vec3::new(map_axis(0, p.x), map_axis(1, p.y), map_axis(2, p.z));
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = map(*v);
    }
    if let Some(spine) = &mut out.spine {
        for v in spine {
            *v = map(*v);
        }
    }
    Ok(out)
}

/// Axis-aligned box exactly filling `b`.
pub fn default_cube(b: &BoundingVolume) -> Mesh {
    let unit = primitives::cube();
    fit_to_bounds(&unit, b).expect("cube is not empty")
}

/// Runs a program and returns its solid result in program coordinates.
pub fn run_program(node: &str, code: &str, opts: &ExecOptions) -> Result<NodeOutput, ExecError> {
    let scene = run_source(code, opts.max_statements).map_err(|d| ExecError::Program {
        node: node.to_string(),
        diagnostics: d,
    })?;
    if !scene.result.has_surface() {
        let mut diagnostics = scene.warnings;
        let line = code.lines().count().max(1);
        diagnostics.push(Diagnostic::error(
            line,
            DiagnosticKind::Note,
            "the program produced no geometry with a surface",
        ));
        return Err(ExecError::Program {
            node: node.to_string(),
            diagnostics,
        });
    }
    let mut mesh = scene.result;
    mesh.spine = None;
    Ok(NodeOutput {
        mesh,
        warnings: scene.warnings,
    })
}

/// Ω for one node: the default cube when there is no code, else the fitted
/// program result, tagged with the node name.
pub fn execute_node(node: &GpsNode, opts: &ExecOptions) -> Result<NodeOutput, ExecError> {
    let b = node.bounds.ok_or_else(|| ExecError::MissingBounds(node.name.clone()))?;
    let mut out = match node.code.as_deref() {
        Some(code) if !code.trim().is_empty() => {
            let raw = run_program(&node.name, code, opts)?;
            let mesh = fit(&raw.mesh, &b, opts.uniform_fit)?;
            NodeOutput {
                mesh,
                warnings: raw.warnings,
            }
        }
        _ => NodeOutput {
            mesh: default_cube(&b),
            warnings: Vec::new(),
        },
    };
    out.mesh.component_tag = Some(node.name.clone());
    Ok(out)
}

pub fn partial_geometry(graph: &GpsGraph, node_name: &str, opts: &ExecOptions) -> Result<NodeOutput, ExecError> {
    let node = graph
        .node(node_name)
        .ok_or_else(|| ExecError::UnknownNode(node_name.to_string()))?;
    execute_node(node, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    /// One tagged mesh per successful node, in graph order.
    pub components: Vec<Mesh>,
    pub failures: Vec<(String, ExecError)>,
    pub warnings: Vec<(String, Diagnostic)>,
}

impl Assembly {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn mesh(&self) -> Mesh {
        Mesh::concat(&self.components)
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(self.components.iter().flat_map(|m| m.vertices.iter()))
    }

    pub fn to_obj(&self) -> String {
        crate::geometry::io::write_obj(&self.components)
    }

    pub fn failure_report(&self) -> String {
        let mut s = String::new();
        for (name, e) in &self.failures {
            s.push_str(&format!("{name}: {e}\n"));
        }
        s
    }
}

/// Executes every node (concurrently) and concatenates the results in graph
/// order. Failing nodes are reported and left out.
pub fn assemble(graph: &GpsGraph, opts: &ExecOptions) -> Assembly {
    let results: Vec<Result<NodeOutput, ExecError>> = std::thread::scope(|s| {
        let handles: Vec<_> = graph
            .nodes
            .iter()
            .map(|n| s.spawn(move || execute_node(n, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("node execution does not panic"))
            .collect()
    });
    let mut asm = Assembly {
        components: Vec::new(),
        failures: Vec::new(),
        warnings: Vec::new(),
    };
    for (node, r) in graph.nodes.iter().zip(results) {
        match r {
            Ok(out) => {
                asm.warnings
                    .extend(out.warnings.into_iter().map(|w| (node.name.clone(), w)));
                asm.components.push(out.mesh);
            }
            Err(e) => asm.failures.push((node.name.clone(), e)),
        }
    }
    asm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(c: [f64; 3], s: [f64; 3]) -> BoundingVolume {
        BoundingVolume::new(Vec3::from_array(c), Vec3::from_array(s)).unwrap()
    }

    #[test]
    fn default_cube_fills_bounds() {
        let n = GpsNode::new("a", "", "").with_bounds(bv([0.0; 3], [2.0; 3]));
        let m = execute_node(&n, &ExecOptions::default()).unwrap().mesh;
        assert_eq!(m.aabb().unwrap(), Aabb::new(Vec3::splat(-1.0), Vec3::splat(1.0)));
        assert_eq!(m.component_tag.as_deref(), Some("a"));
        let n = GpsNode::new("a", "", "").with_bounds(bv([1.0, 2.0, 3.0], [2.0, 4.0, 6.0])).with_code("  \n");
        let b = execute_node(&n, &ExecOptions::default()).unwrap().mesh.aabb().unwrap();
        assert_eq!(b.min, Vec3::ZERO);
        assert_eq!(b.max, Vec3::new(2.0, 4.0, 6.0));
    }

    #[test]
    fn program_is_fitted() {
        let n = GpsNode::new("a", "", "")
            .with_bounds(bv([0.0; 3], [4.0, 2.0, 2.0]))
            .with_code("cube()");
        let b = execute_node(&n, &ExecOptions::default()).unwrap().mesh.aabb().unwrap();
        assert_eq!(b, Aabb::new(Vec3::new(-2.0, -1.0, -1.0), Vec3::new(2.0, 1.0, 1.0)));
    }

    #[test]
    fn flat_axis_is_centred() {
        let m = primitives::plane(2.0);
        let out = fit_to_bounds(&m, &bv([0.0, 0.0, 5.0], [2.0, 2.0, 2.0])).unwrap();
        let b = out.aabb().unwrap();
        assert_eq!(b.min.z, 5.0);
        assert_eq!(b.max.z, 5.0);
        assert_eq!(b.min.x, -1.0);
    }

    #[test]
    fn identity_fit() {
        let m = primitives::cube();
        let out = fit_to_bounds(&m, &bv([0.0; 3], [2.0; 3])).unwrap();
        for (a, b) in m.vertices.iter().zip(&out.vertices) {
            assert!((*a - *b).length() < 1e-12);
        }
    }

    #[test]
    fn uniform_fit_keeps_proportions() {
        let m = primitives::cube();
        let out = fit_uniform(&m, &bv([0.0; 3], [4.0, 2.0, 8.0])).unwrap();
        let e = out.aabb().unwrap().extent();
        assert_eq!(e, Vec3::splat(2.0));
    }

    #[test]
    fn assembly_with_failure() {
        let g = GpsGraph {
            root_summary: String::new(),
            nodes: vec![
                GpsNode::new("a", "", "").with_bounds(bv([0.0; 3], [2.0; 3])),
                GpsNode::new("b", "", "").with_bounds(bv([5.0, 0.0, 0.0], [1.0; 3])).with_code("sphere(segments=8, rings=4)"),
                GpsNode::new("c", "", "").with_bounds(bv([9.0, 0.0, 0.0], [1.0; 3])).with_code("cube(\n"),
            ],
        };
        let asm = assemble(&g, &ExecOptions::default());
        assert_eq!(asm.components.len(), 2);
        assert_eq!(asm.failures.len(), 1);
        assert_eq!(asm.failures[0].0, "c");
        assert_eq!(asm.mesh().vertices.len(), 8 + 26);
        assert_eq!(asm.to_obj().lines().filter(|l| l.starts_with("o ")).count(), 2);
    }

    #[test]
    fn partial_and_unknown() {
        let g = GpsGraph {
            root_summary: String::new(),
            nodes: vec![GpsNode::new("a", "", "").with_bounds(bv([0.0; 3], [2.0; 3]))],
        };
        let opts = ExecOptions::default();
        assert_eq!(partial_geometry(&g, "a", &opts).unwrap(), execute_node(&g.nodes[0], &opts).unwrap());
        assert!(matches!(partial_geometry(&g, "zz", &opts), Err(ExecError::UnknownNode(_))));
        let unbounded = GpsNode::new("x", "", "");
        assert!(matches!(execute_node(&unbounded, &opts), Err(ExecError::MissingBounds(_))));
    }

    #[test]
    fn empty_result_is_an_error() {
        let n = GpsNode::new("a", "", "")
            .with_bounds(bv([0.0; 3], [1.0; 3]))
            .with_code("polyline(points=[(0,0,0),(1,0,0)])");
        let e = execute_node(&n, &ExecOptions::default()).unwrap_err();
        let d = e.diagnostics();
        assert!(d.last().unwrap().message.contains("no geometry"));
    }
}
