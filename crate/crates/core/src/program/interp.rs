use std::collections::HashMap;

use indexmap::IndexMap;

use super::builtins::{self, ArgType, BuiltinGroup, BuiltinSpec};
use super::diagnostic::{Diagnostic, DiagnosticKind};
use super::syntax::{parse, Literal, ShapeProgram, Statement};
use crate::geometry::{
    apply_modifier, make_curve_object, make_primitive, Built, KernelError, Mesh, ModifierSpec, ParamValue, Params,
    PrimitiveKind, Vec3,
};

pub const DEFAULT_STATEMENT_BUDGET: usize = 10_000;
/// Upper bound on live triangles, checked before and after every call.
pub const MAX_TRIANGLES: usize = 2_000_000;

/// Objects alive at the end of a run, in creation order, and their
/// concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObjects {
    pub objects: IndexMap<String, Mesh>,
    pub result: Mesh,
    pub warnings: Vec<Diagnostic>,
}

impl SceneObjects {
    /// Live objects that have a surface.
    pub fn solid_objects(&self) -> impl Iterator<Item = (&String, &Mesh)> {
        self.objects.iter().filter(|(_, m)| m.has_surface())
    }
}

/// Parses and executes `source`.
pub fn run_source(source: &str, max_statements: usize) -> Result<SceneObjects, Vec<Diagnostic>> {
    let program = parse(source)?;
    execute(&program, max_statements)
}

/// Runs the statements in order. On the first runtime error, returns the
/// warnings gathered so far followed by that error.
pub fn execute(program: &ShapeProgram, max_statements: usize) -> Result<SceneObjects, Vec<Diagnostic>> {
    let mut st = State::default();
    for (n, stmt) in program.statements.iter().enumerate() {
        if n >= max_statements {
            let mut diags = st.warnings;
            diags.push(Diagnostic::error(
                stmt.line,
                DiagnosticKind::StatementBudgetExceeded,
                format!("statement budget of {max_statements} exceeded"),
            ));
            return Err(diags);
        }
        if let Err(e) = st.run(stmt) {
            let mut diags = st.warnings;
            diags.push(e);
            return Err(diags);
        }
    }
    let result = Mesh::concat(st.objects.values());
    Ok(SceneObjects {
        objects: st.objects,
        result,
        warnings: st.warnings,
    })
}

#[derive(Default)]
struct State {
    objects: IndexMap<String, Mesh>,
    /// Old key -> key the object now lives under.
    aliases: HashMap<String, String>,
    /// Key -> line of the boolean that consumed it.
    consumed: HashMap<String, usize>,
    warnings: Vec<Diagnostic>,
    auto: usize,
}

enum Bound {
    Param(ParamValue),
    Object(String),
}

fn err(line: usize, kind: DiagnosticKind, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(line, kind, msg)
}

impl State {
    fn resolve(&self, name: &str, line: usize) -> Result<String, Diagnostic> {
        let mut key = name.to_string();
        for _ in 0..=self.aliases.len() {
            if self.objects.contains_key(&key) {
                return Ok(key);
            }
            if let Some(l) = self.consumed.get(&key) {
                return Err(err(
                    line,
                    DiagnosticKind::UnboundIdentifier,
                    format!("object '{name}' was removed by the boolean on line {l}"),
                ));
            }
            match self.aliases.get(&key) {
                Some(next) => key = next.clone(),
                None => break,
            }
        }
        Err(err(
            line,
            DiagnosticKind::UnboundIdentifier,
            format!("unknown object '{name}'"),
        ))
    }

    fn live_triangles(&self) -> usize {
        self.objects.values().map(|m| m.triangles.len()).sum()
    }

    fn run(&mut self, stmt: &Statement) -> Result<(), Diagnostic> {
        let line = stmt.line;
        let spec = match (&stmt.qualifier, builtins::lookup(&stmt.callee)) {
            (None, Some(b)) => b,
            (Some(q), Some(b)) if q == "Modifiers" && b.is_modifier() => b,
            _ => {
                return Err(err(
                    line,
                    DiagnosticKind::UnknownBuiltin,
                    format!("unsupported builtin '{}'", stmt.full_callee()),
                ))
            }
        };
        let bound = self.bind(spec, stmt)?;

        let mut params = Params::new();
        let mut objects: HashMap<&str, String> = HashMap::new();
        for (name, b) in bound {
            match b {
                Bound::Param(v) => params.insert(name, v),
                Bound::Object(k) => {
                    objects.insert(name, k);
                }
            }
        }

        let estimate = self.estimate(spec, &params, &objects);
        if estimate > MAX_TRIANGLES as f64 {
            return Err(err(
                line,
                DiagnosticKind::TooLarge,
                format!(
                    "{} would create about {:.0} triangles; the limit is {MAX_TRIANGLES}",
                    spec.name, estimate
                ),
            ));
        }

        let kernel = |e: KernelError| err(line, DiagnosticKind::Kernel, format!("{}: {e}", spec.name));
        match spec.group {
            BuiltinGroup::Primitive(kind) => {
                let built = make_primitive(kind, &params).map_err(kernel)?;
                self.create(stmt, &params, built);
            }
            BuiltinGroup::BoundingBox => {
                let built = make_primitive(PrimitiveKind::Cube, &params).map_err(kernel)?;
                self.create(stmt, &params, built);
            }
            BuiltinGroup::Curve(kind) => {
                if !params.boolean("to_mesh", true).map_err(kernel)? {
                    self.warn(line, format!("{}: to_mesh=false is ignored; curves always become meshes", spec.name));
                }
                let built = make_curve_object(kind, &params).map_err(kernel)?;
                self.create(stmt, &params, built);
            }
            BuiltinGroup::ToMesh => {
                let key = objects["obj"].clone();
                let mesh = self.objects[&key].clone();
                self.replace(stmt, &key, mesh);
            }
            BuiltinGroup::Modifier => {
                let first = if spec.name == "boolean" { "obj_a" } else { "obj" };
                let aux_name = match spec.name {
                    "boolean" => Some("obj_b"),
                    "curve" => Some("curve_obj"),
                    _ => None,
                };
                let key = objects[first].clone();
                let aux_key = aux_name.map(|n| objects[n].clone());
                let mod_spec = ModifierSpec::from_params(spec.name, &params).map_err(kernel)?;
                let target = &self.objects[&key];
                let aux = aux_key.as_ref().map(|k| &self.objects[k]);
                let built = apply_modifier(target, &mod_spec, aux).map_err(kernel)?;
                for w in &built.warnings {
                    self.warn(line, format!("{}: {w}", spec.name));
                }
                let mut mesh = built.mesh;
                mesh.component_tag = None;
                self.replace(stmt, &key, mesh);
                if spec.name == "boolean" && params.boolean("remove", true).map_err(kernel)? {
                    let b = aux_key.expect("boolean has obj_b");
                    let result_key = stmt.target.clone().unwrap_or(key.clone());
                    if b != result_key && b != key {
                        self.objects.shift_remove(&b);
                        self.consumed.insert(b, line);
                    }
                }
            }
        }

        let live = self.live_triangles();
        if live > MAX_TRIANGLES {
            return Err(err(
                line,
                DiagnosticKind::TooLarge,
                format!("the scene has {live} triangles; the limit is {MAX_TRIANGLES}"),
            ));
        }
        Ok(())
    }

    fn warn(&mut self, line: usize, msg: String) {
        self.warnings.push(Diagnostic::warning(line, msg));
    }

    /// Matches positional and keyword arguments to the builtin's parameters
    /// and converts them.
    fn bind(&mut self, spec: &BuiltinSpec, stmt: &Statement) -> Result<Vec<(&'static str, Bound)>, Diagnostic> {
        let line = stmt.line;
        if stmt.args.len() > spec.params.len() {
            return Err(err(
                line,
                DiagnosticKind::ArityMismatch,
                format!(
                    "{} takes at most {} positional arguments, got {}",
                    spec.name,
                    spec.params.len(),
                    stmt.args.len()
                ),
            ));
        }
        let mut given: Vec<(&'static str, &Literal)> = Vec::new();
        for (p, v) in spec.params.iter().zip(&stmt.args) {
            given.push((p.name, v));
        }
        for (k, v) in &stmt.kwargs {
            match spec.param(k) {
                Some(p) => {
                    if given.iter().any(|(n, _)| *n == p.name) {
                        return Err(err(
                            line,
                            DiagnosticKind::ArityMismatch,
                            format!("{} got multiple values for '{k}'", spec.name),
                        ));
                    }
                    given.push((p.name, v));
                }
                None => self.warn(line, format!("{}: unknown keyword '{k}' is ignored", spec.name)),
            }
        }
        for p in spec.params {
            if p.default.is_none() && !given.iter().any(|(n, _)| *n == p.name) {
                return Err(err(
                    line,
                    DiagnosticKind::ArityMismatch,
                    format!("{} is missing the required argument '{}'", spec.name, p.name),
                ));
            }
        }
        let mut out = Vec::with_capacity(given.len());
        for (name, v) in given {
            let ty = spec.param(name).expect("bound to a known parameter").ty;
            out.push((name, self.convert(spec, name, ty, v, line)?));
        }
        Ok(out)
    }

    fn convert(&self, spec: &BuiltinSpec, name: &str, ty: ArgType, v: &Literal, line: usize) -> Result<Bound, Diagnostic> {
        let mismatch = || {
            let got = match v {
                Literal::Ident(id) => format!("object reference '{id}'"),
                other => other.type_name().to_string(),
            };
            err(
                line,
                DiagnosticKind::TypeMismatch,
                format!("{}: '{name}' expects {}, got {got}", spec.name, ty.describe()),
            )
        };
        let p = |v: ParamValue| Ok(Bound::Param(v));
        match (ty, v) {
            (ArgType::Object, Literal::Ident(id)) => Ok(Bound::Object(self.resolve(id, line)?)),
            (ArgType::Object, Literal::Str(s)) if self.objects.contains_key(s) => Ok(Bound::Object(s.clone())),
            (ArgType::Number, Literal::Int(_) | Literal::Real(_)) => p(ParamValue::Number(v.as_f64().expect("numeric"))),
            (ArgType::Int, Literal::Int(i)) => p(ParamValue::Number(*i as f64)),
            (ArgType::Int, Literal::Real(r)) if r.fract() == 0.0 => p(ParamValue::Number(*r)),
            (ArgType::Bool, Literal::Bool(b)) => p(ParamValue::Bool(*b)),
            (ArgType::Str, Literal::Str(s)) => p(ParamValue::Text(s.clone())),
            (ArgType::Vec3, Literal::Tuple(items) | Literal::List(items)) => match numbers(items) {
                Some(n) if n.len() == 2 || n.len() == 3 => p(ParamValue::Tuple(n)),
                _ => Err(mismatch()),
            },
            (ArgType::Flags3, Literal::Tuple(items) | Literal::List(items)) => {
                let flags: Option<Vec<bool>> = items
                    .iter()
                    .map(|i| match i {
                        Literal::Bool(b) => Some(*b),
                        _ => None,
                    })
                    .collect();
                match flags {
                    Some(f) if f.len() == 3 => p(ParamValue::Flags(f)),
                    _ => Err(mismatch()),
                }
            }
            (ArgType::Points, Literal::Tuple(items) | Literal::List(items)) => {
                let mut pts = Vec::with_capacity(items.len());
                for it in items {
                    let n = match it {
                        Literal::Tuple(c) | Literal::List(c) => numbers(c),
                        _ => None,
                    };
                    match n.as_deref() {
                        Some([x, y]) => pts.push(Vec3::new(*x, *y, 0.0)),
                        Some([x, y, z]) => pts.push(Vec3::new(*x, *y, *z)),
                        _ => return Err(mismatch()),
                    }
                }
                p(ParamValue::Points(pts))
            }
            _ => Err(mismatch()),
        }
    }

    /// Rough triangle count of the call's output.
    fn estimate(&self, spec: &BuiltinSpec, params: &Params, objects: &HashMap<&str, String>) -> f64 {
        let num = |n: &str, d: f64| match params.get(n) {
            Some(ParamValue::Number(v)) => v.abs(),
            _ => d,
        };
        let operand = |n: &str| objects.get(n).map_or(0.0, |k| self.objects[k].triangles.len() as f64);
        match spec.name {
            "sphere" => 2.0 * num("segments", 32.0) * num("rings", 16.0),
            "cylinder" | "cone" => 4.0 * num("vertices", 32.0),
            "prism" => 4.0 * num("sides", 3.0),
            "capsule" => {
                let s = num("segments", 32.0);
                4.0 * s * (s / 4.0).max(2.0) + 4.0 * s
            }
            "circle" => 4.0 * 16.0 * num("segments", 32.0),
            "bezier_curve" | "polyline" => {
                let n = match params.get("points") {
                    Some(ParamValue::Points(p)) => p.len() as f64,
                    _ => 0.0,
                };
                4.0 * 16.0 * 12.0 * n
            }
            "subdivision" => operand("obj") * 4f64.powf(num("levels", 2.0)),
            "array" => operand("obj") * num("count", 5.0),
            "mirror" => operand("obj") * 8.0,
            _ => 0.0,
        }
    }

    fn fresh_key(&mut self, base: Option<&str>) -> String {
        match base {
            Some(b) if !b.is_empty() => {
                if !self.objects.contains_key(b) {
                    return b.to_string();
                }
                (1..)
                    .map(|i| format!("{b}.{i:03}"))
                    .find(|k| !self.objects.contains_key(k))
                    .expect("unbounded search")
            }
            _ => loop {
                self.auto += 1;
                let k = format!("_obj{}", self.auto);
                if !self.objects.contains_key(&k) {
                    return k;
                }
            },
        }
    }

    /// Stores a newly created object: under its binding if there is one,
    /// else under its `name`, else under a generated key.
    fn create(&mut self, stmt: &Statement, params: &Params, built: Built) {
        for w in built.warnings {
            self.warn(stmt.line, format!("{}: {w}", stmt.callee));
        }
        let key = match &stmt.target {
            Some(t) => t.clone(),
            None => {
                let name = params.string("name", "").unwrap_or_default();
                self.fresh_key(Some(&name))
            }
        };
        self.aliases.remove(&key);
        self.consumed.remove(&key);
        self.objects.insert(key, built.mesh);
    }

    /// Writes a modifier result. The object keeps its slot; with a binding
    /// it is renamed and the old name becomes an alias.
    fn replace(&mut self, stmt: &Statement, key: &str, mesh: Mesh) {
        match &stmt.target {
            Some(t) if t != key => {
                self.objects.shift_remove(t);
                let idx = self.objects.get_index_of(key).expect("operand is live");
                self.objects.shift_remove(key);
                self.objects.shift_insert(idx, t.clone(), mesh);
                self.aliases.insert(key.to_string(), t.clone());
                self.aliases.remove(t);
                self.consumed.remove(t);
            }
            _ => {
                self.objects.insert(key.to_string(), mesh);
            }
        }
    }
}

fn numbers(items: &[Literal]) -> Option<Vec<f64>> {
    items.iter().map(Literal::as_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn run(src: &str) -> Result<SceneObjects, Vec<Diagnostic>> {
        run_source(src, DEFAULT_STATEMENT_BUDGET)
    }

    #[test]
    fn single_default_cube() {
        let s = run("cube()").unwrap();
        assert_eq!(s.objects.len(), 1);
        let b = s.result.aabb().unwrap();
        assert_eq!(b, Aabb::new(Vec3::splat(-1.0), Vec3::splat(1.0)));
    }

    #[test]
    fn union_removes_operand() {
        let s = run("a = cube()\nb = cube(position=(5,0,0))\nModifiers.boolean(a, b, operation=\"UNION\")").unwrap();
        assert_eq!(s.objects.keys().collect::<Vec<_>>(), vec!["a"]);
        assert!((s.result.signed_volume() - 16.0).abs() < 1e-6);
        let s = run("a = cube()\nb = cube(position=(5,0,0))\nboolean(a, b, operation='UNION', remove=false)").unwrap();
        assert_eq!(s.objects.len(), 2);
    }

    #[test]
    fn text_is_rejected() {
        let d = run("cube()\ntext(name=\"t\", text=\"hi\")").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].to_string(), "line 2: error: unsupported builtin 'text'");
        assert_eq!(d[0].kind, DiagnosticKind::UnknownBuiltin);
    }

    #[test]
    fn consumed_and_unknown_objects() {
        let d = run("a = cube()\nb = sphere()\nboolean(a, b)\nbevel(b)").unwrap_err();
        assert_eq!(d[0].to_string(), "line 4: error: object 'b' was removed by the boolean on line 3");
        let d = run("bevel(nope)").unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::UnboundIdentifier);
    }

    #[test]
    fn arity_and_types() {
        let d = run("boolean(a=1)").unwrap_err();
        assert_eq!(d.last().unwrap().kind, DiagnosticKind::ArityMismatch);
        let d = run("cube(\"a\", name=\"b\")").unwrap_err();
        assert!(d[0].message.contains("multiple values"));
        let d = run("sphere(segments=2.5)").unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::TypeMismatch);
        assert_eq!(d[0].message, "sphere: 'segments' expects an integer, got number");
        let d = run("cube(scale=2)").unwrap_err();
        assert_eq!(d[0].message, "cube: 'scale' expects a tuple of 3 numbers, got integer");
    }

    #[test]
    fn kernel_errors_carry_the_line() {
        let d = run("cube()\n\ncylinder(depth=-1)").unwrap_err();
        assert_eq!(d[0].line, 3);
        assert_eq!(d[0].kind, DiagnosticKind::Kernel);
        assert!(d[0].message.starts_with("cylinder: invalid parameter 'depth'"));
    }

    #[test]
    fn warnings_precede_the_error() {
        let d = run("cube(colour=1)\nfoo()").unwrap_err();
        assert_eq!(d.len(), 2);
        assert!(!d[0].is_error());
        assert!(d[1].is_error());
    }

    #[test]
    fn statement_budget() {
        let d = run_source("cube()\ncube()\ncube()", 2).unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::StatementBudgetExceeded);
        assert_eq!(d[0].line, 3);
    }

    #[test]
    fn too_large() {
        let d = run("sphere(segments=5000, rings=5000)").unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::TooLarge);
        let d = run("a = sphere()\nsubdivision(a, levels=6)").unwrap_err();
        assert_eq!(d[0].kind, DiagnosticKind::TooLarge);
    }

    #[test]
    fn duplicate_names_do_not_clobber() {
        let s = run("cube(name=\"leg\")\ncube(name=\"leg\", position=(3,0,0))\ncube()").unwrap();
        assert_eq!(s.objects.keys().collect::<Vec<_>>(), vec!["leg", "leg.001", "_obj1"]);
    }

    #[test]
    fn rebinding_replaces() {
        let s = run("a = cube()\na = sphere(segments=8, rings=4)").unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.objects["a"].vertices.len(), 26);
    }

    #[test]
    fn bound_modifier_moves_and_aliases() {
        let s = run("a = cube()\nx = cube(position=(4,0,0))\nb = Modifiers.mirror(a, axis=(false,false,true))\nsubdivision(a, levels=1)")
            .unwrap();
        assert_eq!(s.objects.keys().collect::<Vec<_>>(), vec!["b", "x"]);
        assert_eq!(s.objects["b"].triangles.len(), 12 * 2 * 4);
    }

    #[test]
    fn curve_and_to_mesh() {
        let src = "path = bezier_curve(points=[(0,0,0),(1,1,0),(2,0,0)])\nbody = cylinder(vertices=8)\nModifiers.curve(body, path, deform_axis='POS_Z')\nModifiers.to_mesh(body)";
        let s = run(src).unwrap();
        assert!(!s.objects["path"].has_surface());
        assert_eq!(s.solid_objects().count(), 1);
        assert!(!s.warnings.is_empty());
    }

    #[test]
    fn deterministic() {
        let src = "a = sphere(segments=12, rings=6)\nb = cube(scale=(0.5,0.5,2))\nboolean(a, b)\nbevel(a, width=0.05, segments=1)";
        let x = run(src).unwrap();
        let y = run(src).unwrap();
        assert_eq!(x, y);
    }
}
