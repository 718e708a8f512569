//! Mesh modifiers. Each one returns a new mesh; inputs are never touched.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::csg::{self, BooleanOp};
use super::curves::{rotation_minimizing_frames, Polyline};
use super::math::{Affine, Vec3};
use super::mesh::Mesh;
use super::params::Params;
use super::primitives;
use super::{Built, KernelError};

/// Edges whose interior dihedral angle is below this many degrees are bevelled.
pub const BEVEL_ANGLE_DEG: f64 = 150.0;
pub const MAX_SUBDIVISION_LEVELS: usize = 6;
pub const MAX_ARRAY_COUNT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BevelAffect {
    Edges,
    Vertices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeformAxis {
    pub axis: usize,
    pub negative: bool,
}

impl FromStr for DeformAxis {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.to_ascii_uppercase();
        let (negative, rest) = if let Some(r) = up.strip_prefix("NEG_") {
            (true, r)
        } else if let Some(r) = up.strip_prefix("POS_") {
            (false, r)
        } else {
            (false, up.as_str())
        };
        let axis = match rest {
            "X" => 0,
            "Y" => 1,
            "Z" => 2,
            _ => {
                return Err(KernelError::InvalidParam {
                    name: "deform_axis".into(),
                    reason: format!("expected POS_X, POS_Y, POS_Z, NEG_X, NEG_Y or NEG_Z, got '{s}'"),
                })
            }
        };
        Ok(DeformAxis { axis, negative })
    }
}

impl fmt::Display for DeformAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "NEG" } else { "POS" };
        write!(f, "{sign}_{}", ["X", "Y", "Z"][self.axis])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModifierSpec {
    Boolean { op: BooleanOp },
    Array { count: usize, relative_offset: Vec3 },
    Mirror { axes: [bool; 3], use_clip: bool },
    Solidify { thickness: f64 },
    Subdivision { levels: usize },
    Bevel { width: f64, segments: usize, affect: BevelAffect },
    Curve { deform_axis: DeformAxis },
}

impl ModifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModifierSpec::Boolean { .. } => "boolean",
            ModifierSpec::Array { .. } => "array",
            ModifierSpec::Mirror { .. } => "mirror",
            ModifierSpec::Solidify { .. } => "solidify",
            ModifierSpec::Subdivision { .. } => "subdivision",
            ModifierSpec::Bevel { .. } => "bevel",
            ModifierSpec::Curve { .. } => "curve",
        }
    }

    pub fn needs_aux(&self) -> bool {
        matches!(self, ModifierSpec::Boolean { .. } | ModifierSpec::Curve { .. })
    }

    /// Reads a modifier from its keyword arguments. `render_levels` is
    /// accepted and ignored.
    pub fn from_params(name: &str, p: &Params) -> Result<ModifierSpec, KernelError> {
        let invalid = |n: &str, r: String| KernelError::InvalidParam {
            name: n.to_string(),
            reason: r,
        };
        Ok(match name {
            "boolean" => ModifierSpec::Boolean {
                op: p.string("operation", "DIFFERENCE")?.parse()?,
            },
            "array" => ModifierSpec::Array {
                count: {
                    let c = p.count("count", 5, 1)?;
                    if c > MAX_ARRAY_COUNT {
                        return Err(invalid("count", format!("must be at most {MAX_ARRAY_COUNT}, got {c}")));
                    }
                    c
                },
                relative_offset: p.vec3_or("relative_offset", Vec3::new(1.2, 0.0, 0.0))?,
            },
            "mirror" => ModifierSpec::Mirror {
                axes: p.flags3("axis", [true, false, false])?,
                use_clip: p.boolean("use_clip", true)?,
            },
            "solidify" => ModifierSpec::Solidify {
                thickness: p.positive("thickness", 0.2)?,
            },
            "subdivision" => {
                let levels = p.count("levels", 2, 0)?;
                let _ = p.count("render_levels", 3, 0)?;
                if levels > MAX_SUBDIVISION_LEVELS {
                    return Err(invalid(
                        "levels",
                        format!("must be at most {MAX_SUBDIVISION_LEVELS}, got {levels}"),
                    ));
                }
                ModifierSpec::Subdivision { levels }
            }
            "bevel" => ModifierSpec::Bevel {
                width: p.positive("width", 0.1)?,
                segments: {
                    let s = p.count("segments", 3, 1)?;
                    if s > 32 {
                        return Err(invalid("segments", format!("must be at most 32, got {s}")));
                    }
                    s
                },
                affect: match p.string("affect", "EDGES")?.to_ascii_uppercase().as_str() {
                    "EDGES" => BevelAffect::Edges,
                    "VERTICES" => BevelAffect::Vertices,
                    other => return Err(invalid("affect", format!("expected EDGES or VERTICES, got '{other}'"))),
                },
            },
            "curve" => ModifierSpec::Curve {
                deform_axis: p.string("deform_axis", "POS_X")?.parse()?,
            },
            other => return Err(KernelError::UnknownModifier(other.to_string())),
        })
    }
}

/// Applies `spec` to `target`. Booleans and curve deforms need `aux`.
pub fn apply_modifier(target: &Mesh, spec: &ModifierSpec, aux: Option<&Mesh>) -> Result<Built, KernelError> {
    let aux_mesh = || aux.ok_or_else(|| KernelError::MissingAuxMesh(spec.name().to_string()));
    if let ModifierSpec::Curve { deform_axis } = spec {
        let curve = aux_mesh()?;
        if target.vertices.is_empty() {
            return Err(KernelError::EmptyMesh);
        }
        return curve_deform(target, curve, *deform_axis).map(Built::plain);
    }
    if !target.has_surface() {
        return Err(KernelError::EmptyMesh);
    }
    let mut built = match spec {
        ModifierSpec::Boolean { op } => csg::boolean(target, aux_mesh()?, *op)?,
        ModifierSpec::Array { count, relative_offset } => Built::plain(array(target, *count, *relative_offset)?),
        ModifierSpec::Mirror { axes, use_clip } => Built::plain(mirror(target, *axes, *use_clip)),
        ModifierSpec::Solidify { thickness } => Built::plain(solidify(target, *thickness)),
        ModifierSpec::Subdivision { levels } => Built::plain(subdivide(target, *levels)),
        ModifierSpec::Bevel {
            width,
            segments,
            affect,
        } => bevel(target, *width, *segments, *affect)?,
        ModifierSpec::Curve { .. } => unreachable!("handled above"),
    };
    built.mesh.component_tag = target.component_tag.clone();
    Ok(built)
}

/// `count` copies, copy `k` shifted by `k * relative_offset * extent`.
pub fn array(mesh: &Mesh, count: usize, relative_offset: Vec3) -> Result<Mesh, KernelError> {
    let step = relative_offset.mul_elem(mesh.aabb()?.extent());
    let mut out = Mesh::empty();
    for k in 0..count {
        let shift = step * k as f64;
        let mut copy = mesh.clone();
        for v in &mut copy.vertices {
            *v += shift;
        }
        out.append(&copy);
    }
    out.spine = None;
    Ok(out)
}

/// Reflects across the selected world planes through the origin and merges
/// the copy. With `use_clip`, vertices past a mirror plane (on the side
/// opposite the bulk of the mesh) are clamped onto it first.
pub fn mirror(mesh: &Mesh, axes: [bool; 3], use_clip: bool) -> Mesh {
    let mut out = mesh.clone();
    for axis in (0..3).filter(|&a| axes[a]) {
        if use_clip {
            let center = out.aabb().map(|b| b.center()[axis]).unwrap_or(0.0);
            let keep_positive = center >= 0.0;
            for v in &mut out.vertices {
                let x = v[axis];
                if (keep_positive && x < 0.0) || (!keep_positive && x > 0.0) {
                    *v = v.with(axis, 0.0);
                }
            }
        }
        let mut reflected = out.clone();
        for v in &mut reflected.vertices {
            *v = v.with(axis, -v[axis]);
        }
        reflected.flip_winding();
        out.append(&reflected);
        out = out.welded();
    }
    out.spine = None;
    out
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Directed boundary edges (as they appear in their single triangle).
fn boundary_edges(mesh: &Mesh) -> Vec<(u32, u32)> {
    let mut count: HashMap<(u32, u32), usize> = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&edge_key(a, b)] == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Adds an inner offset surface `thickness` behind the original along the
/// vertex normals and stitches open borders, so the result is a closed shell.
pub fn solidify(mesh: &Mesh, thickness: f64) -> Mesh {
    let m = mesh.welded().compacted();
    let normals = m.vertex_normals();
    let n = m.vertices.len() as u32;
    let mut out = m.clone();
    out.vertices
        .extend(m.vertices.iter().zip(&normals).map(|(v, nrm)| *v - *nrm * thickness));
    out.triangles
        .extend(m.triangles.iter().map(|t| [t[0] + n, t[2] + n, t[1] + n]));
    for (a, b) in boundary_edges(&m) {
        out.triangles.push([a, a + n, b + n]);
        out.triangles.push([a, b + n, b]);
    }
    out.spine = None;
    out
}

/// Loop subdivision, `levels` rounds. Every round quadruples the triangle count.
pub fn subdivide(mesh: &Mesh, levels: usize) -> Mesh {
    let mut m = mesh.welded().compacted();
    for _ in 0..levels {
        m = loop_step(&m);
    }
    m.component_tag = mesh.component_tag.clone();
    m
}

fn loop_step(m: &Mesh) -> Mesh {
    let nv = m.vertices.len();
    // edge -> opposite vertices
    let mut opposite: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for t in &m.triangles {
        for k in 0..3 {
            opposite
                .entry(edge_key(t[k], t[(k + 1) % 3]))
                .or_default()
                .push(t[(k + 2) % 3]);
        }
    }
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
    let mut boundary_nbrs: Vec<Vec<u32>> = vec![Vec::new(); nv];
    let mut edges: Vec<(u32, u32)> = opposite.keys().copied().collect();
    edges.sort_unstable();
    for &(a, b) in &edges {
        neighbors[a as usize].push(b);
        neighbors[b as usize].push(a);
        if opposite[&(a, b)].len() != 2 {
            boundary_nbrs[a as usize].push(b);
            boundary_nbrs[b as usize].push(a);
        }
    }
    let p = &m.vertices;
    let mut vertices: Vec<Vec3> = (0..nv)
        .map(|i| {
            let v = p[i];
            if !boundary_nbrs[i].is_empty() {
                if boundary_nbrs[i].len() == 2 {
                    let (a, b) = (boundary_nbrs[i][0] as usize, boundary_nbrs[i][1] as usize);
                    v * 0.75 + (p[a] + p[b]) * 0.125
                } else {
                    v
                }
            } else {
                let n = neighbors[i].len();
                if n == 0 {
                    return v;
                }
                let beta = if n == 3 { 3.0 / 16.0 } else { 3.0 / (8.0 * n as f64) };
                let sum = neighbors[i].iter().fold(Vec3::ZERO, |acc, &j| acc + p[j as usize]);
                v * (1.0 - n as f64 * beta) + sum * beta
            }
        })
        .collect();
    let mut edge_vertex: HashMap<(u32, u32), u32> = HashMap::with_capacity(edges.len());
    for &(a, b) in &edges {
        let opp = &opposite[&(a, b)];
        let (pa, pb) = (p[a as usize], p[b as usize]);
        let pos = if opp.len() == 2 {
            (pa + pb) * 0.375 + (p[opp[0] as usize] + p[opp[1] as usize]) * 0.125
        } else {
            (pa + pb) * 0.5
        };
        edge_vertex.insert((a, b), vertices.len() as u32);
        vertices.push(pos);
    }
    let mut triangles = Vec::with_capacity(m.triangles.len() * 4);
    for t in &m.triangles {
        let [a, b, c] = *t;
        let ab = edge_vertex[&edge_key(a, b)];
        let bc = edge_vertex[&edge_key(b, c)];
        let ca = edge_vertex[&edge_key(c, a)];
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Mesh {
        vertices,
        triangles,
        component_tag: m.component_tag.clone(),
        spine: None,
    }
}

struct SharpEdge {
    ia: u32,
    ib: u32,
    a: Vec3,
    b: Vec3,
    n1: Vec3,
    n2: Vec3,
    /// In-face directions pointing away from the edge.
    d1: Vec3,
    d2: Vec3,
}

/// Convex edges sharper than [`BEVEL_ANGLE_DEG`] and the number of concave
/// sharp edges skipped.
fn sharp_edges(m: &Mesh) -> (Vec<SharpEdge>, usize) {
    let mut faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, t) in m.triangles.iter().enumerate() {
        for k in 0..3 {
            faces.entry(edge_key(t[k], t[(k + 1) % 3])).or_default().push(i);
        }
    }
    let cos_limit = (180.0 - BEVEL_ANGLE_DEG).to_radians().cos();
    let mut keys: Vec<_> = faces.keys().copied().collect();
    keys.sort_unstable();
    let mut out = Vec::new();
    let mut concave = 0;
    for key in keys {
        let fs = &faces[&key];
        if fs.len() != 2 {
            continue;
        }
        let (Some(n1), Some(n2)) = (
            m.face_cross(fs[0]).try_normalize(),
            m.face_cross(fs[1]).try_normalize(),
        ) else {
            continue;
        };
        if n1.dot(n2) >= cos_limit {
            continue;
        }
        let a = m.vertices[key.0 as usize];
        let b = m.vertices[key.1 as usize];
        let e = (b - a).normalize_or_zero();
        let away = |f: usize| {
            let t = m.triangles[f];
            let c = t.iter().find(|&&v| v != key.0 && v != key.1).copied().unwrap_or(t[0]);
            let d = m.vertices[c as usize] - a;
            (d - e * d.dot(e)).normalize_or_zero()
        };
        let (d1, d2) = (away(fs[0]), away(fs[1]));
        if n1.dot(d2) > 0.0 {
            concave += 1;
            continue;
        }
        out.push(SharpEdge {
            ia: key.0,
            ib: key.1,
            a,
            b,
            n1,
            n2,
            d1,
            d2,
        });
    }
    (out, concave)
}

/// Closed prism removing the material outside a chamfer (or rounded
/// profile with `segments > 1`) along one edge.
fn edge_wedge(e: &SharpEdge, width: f64, segments: usize) -> Mesh {
    let margin = width;
    let dir = (e.b - e.a).normalize_or_zero();
    let interior = std::f64::consts::PI - e.n1.dot(e.n2).clamp(-1.0, 1.0).acos();
    let t1 = e.d1 * width;
    let t2 = e.d2 * width;
    let mut section = vec![(e.n1 + e.n2).normalize_or_zero() * margin, t1 + e.n1 * margin];
    if segments <= 1 {
        section.push(t1);
        section.push(t2);
    } else {
        let r = width * (interior / 2.0).tan();
        let center = t1 - e.n1 * r;
        let theta = e.n1.dot(e.n2).clamp(-1.0, 1.0).acos();
        for j in 0..=segments {
            let s = j as f64 / segments as f64;
            let w1 = ((1.0 - s) * theta).sin() / theta.sin();
            let w2 = (s * theta).sin() / theta.sin();
            section.push(center + (e.n1 * w1 + e.n2 * w2) * r);
        }
    }
    section.push(t2 + e.n2 * margin);
    let k = section.len() as u32;
    let start = e.a - dir * margin;
    let end = e.b + dir * margin;
    let mut vertices: Vec<Vec3> = section.iter().map(|o| start + *o).collect();
    vertices.extend(section.iter().map(|o| end + *o));
    let mut tris = Vec::new();
    for j in 0..k {
        let j2 = (j + 1) % k;
        tris.push([j, j2, k + j2]);
        tris.push([j, k + j2, k + j]);
    }
    for j in 1..k - 1 {
        tris.push([0, j + 1, j]);
        tris.push([k, k + j, k + j + 1]);
    }
    let mut m = Mesh::new(vertices, tris);
    if m.signed_volume() < 0.0 {
        m.flip_winding();
    }
    m
}

/// Removal box over a convex corner, cutting at roughly `width` along each edge.
fn corner_cap(v: Vec3, normal: Vec3, neighbors: &[Vec3], width: f64) -> Option<Mesh> {
    let heights: Vec<f64> = neighbors
        .iter()
        .filter_map(|u| (*u - v).try_normalize())
        .map(|d| d.dot(normal) * width)
        .collect();
    if heights.is_empty() || heights.iter().any(|&h| h >= 0.0) {
        return None;
    }
    let h = heights.iter().sum::<f64>() / heights.len() as f64;
    let lateral = 1.5 * width;
    let top = width;
    let u = normal.any_perpendicular();
    let w = normal.cross(u);
    let mid = v + normal * ((h + top) / 2.0);
    let half = (top - h) / 2.0;
    let l = [[u.x * lateral, w.x * lateral, normal.x * half], [u.y * lateral, w.y * lateral, normal.y * half], [
        u.z * lateral,
        w.z * lateral,
        normal.z * half,
    ]];
    Some(primitives::cube().map_affine(&Affine::from_linear(l, mid)))
}

/// Chamfers sharp convex edges (or truncates sharp convex corners) by
/// subtracting small removal solids.
pub fn bevel(mesh: &Mesh, width: f64, segments: usize, affect: BevelAffect) -> Result<Built, KernelError> {
    let welded = mesh.welded().compacted();
    let mut warnings = Vec::new();
    if !welded.is_closed_surface() {
        return Err(KernelError::NonManifoldOperand("bevel needs a closed mesh".into()));
    }
    let (edges, concave) = sharp_edges(&welded);
    if concave > 0 {
        warnings.push(format!("bevel skipped {concave} concave edge(s)"));
    }
    let cutters: Vec<Mesh> = match affect {
        BevelAffect::Edges => edges.iter().map(|e| edge_wedge(e, width, segments)).collect(),
        BevelAffect::Vertices => {
            let normals = welded.vertex_normals();
            let mut nbrs: Vec<Vec<u32>> = vec![Vec::new(); welded.vertices.len()];
            for e in &edges {
                nbrs[e.ia as usize].push(e.ib);
                nbrs[e.ib as usize].push(e.ia);
            }
            (0..welded.vertices.len())
                .filter(|&i| !nbrs[i].is_empty())
                .filter_map(|i| {
                    let ns: Vec<Vec3> = nbrs[i].iter().map(|&j| welded.vertices[j as usize]).collect();
                    corner_cap(welded.vertices[i], normals[i], &ns, width)
                })
                .collect()
        }
    };
    let mut out = welded;
    for c in &cutters {
        let r = csg::boolean(&out, c, BooleanOp::Difference)?;
        warnings.extend(r.warnings);
        out = r.mesh;
    }
    out.spine = None;
    Ok(Built { mesh: out, warnings })
}

/// Bends `target` along the spine of `curve`. The deform-axis coordinate,
/// normalised over the target's bounds, selects the arclength position; the
/// two other coordinates (relative to the bounds centre) follow the
/// rotation-minimising frame.
pub fn curve_deform(target: &Mesh, curve: &Mesh, axis: DeformAxis) -> Result<Mesh, KernelError> {
    let spine = curve.spine.as_ref().ok_or_else(|| KernelError::InvalidParam {
        name: "curve_obj".into(),
        reason: "is not a curve object".into(),
    })?;
    if spine.len() < 2 {
        return Err(KernelError::DegenerateCurve("spine has fewer than 2 points".into()));
    }
    let bounds = target.aabb()?;
    let a = axis.axis;
    let along = if axis.negative { -1.0 } else { 1.0 };
    let axis_dir = Vec3::ZERO.with(a, along);
    let reference = if a == 2 { Vec3::Y } else { Vec3::Z };
    let side = reference.cross(axis_dir);

    let poly = Polyline {
        points: spine.clone(),
        closed: false,
    };
    let frames = rotation_minimizing_frames(&poly, reference);
    let mut cumulative = vec![0.0];
    for w in spine.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + w[0].distance(w[1]));
    }
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return Err(KernelError::DegenerateCurve("spine has zero length".into()));
    }
    let extent = bounds.extent()[a];
    let center = bounds.center();
    let mut out = target.clone();
    for v in &mut out.vertices {
        let s = if extent > 0.0 {
            if axis.negative {
                (bounds.max[a] - v[a]) / extent
            } else {
                (v[a] - bounds.min[a]) / extent
            }
        } else {
            0.0
        };
        let dist = s.clamp(0.0, 1.0) * total;
        let i = match cumulative.binary_search_by(|c| c.partial_cmp(&dist).unwrap()) {
            Ok(i) => i.min(spine.len() - 2),
            Err(i) => i.saturating_sub(1).min(spine.len() - 2),
        };
        let seg = cumulative[i + 1] - cumulative[i];
        let f = if seg > 0.0 { (dist - cumulative[i]) / seg } else { 0.0 };
        let pos = spine[i].lerp(spine[i + 1], f);
        let nrm = frames[i].1.lerp(frames[i + 1].1, f).normalize_or_zero();
        let bin = frames[i].2.lerp(frames[i + 1].2, f).normalize_or_zero();
        let o = *v - center;
        *v = pos + nrm * o.dot(side) + bin * o.dot(reference);
    }
    out.spine = None;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::math::Transform;
    use crate::geometry::primitives::{cube, cylinder, plane, uv_sphere};

    #[test]
    fn array_counts() {
        let m = array(&cube(), 4, Vec3::new(1.5, 0.0, 0.0)).unwrap();
        assert_eq!(m.vertices.len(), 32);
        assert!((m.signed_volume() - 32.0).abs() < 1e-9);
        assert!((m.aabb().unwrap().max.x - (1.0 + 3.0 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn mirror_is_symmetric() {
        let m = cube().transformed(&Transform::translation(Vec3::new(3.0, 0.5, 0.0)));
        let r = mirror(&m, [true, false, false], true);
        for v in &r.vertices {
            let refl = Vec3::new(-v.x, v.y, v.z);
            assert!(r.vertices.iter().any(|w| w.distance(refl) < 1e-9));
        }
        assert!((r.signed_volume() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn mirror_clip_clamps_crossing_vertices() {
        let m = cube().transformed(&Transform::translation(Vec3::new(0.5, 0.0, 0.0)));
        let r = mirror(&m, [true, false, false], true);
        let b = r.aabb().unwrap();
        assert!((b.max.x - 1.5).abs() < 1e-12 && (b.min.x + 1.5).abs() < 1e-12);
        // the clipped half spans [0, 1.5] on each side
        assert!((r.signed_volume() - 2.0 * 1.5 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn solidify_plane_makes_slab() {
        let s = solidify(&plane(2.0), 0.2);
        assert_eq!(s.boundary_edge_count(), 0);
        assert!((s.signed_volume() - 0.8).abs() < 1e-12);
        let b = s.aabb().unwrap();
        assert!((b.min.z + 0.2).abs() < 1e-12 && b.max.z == 0.0);
    }

    #[test]
    fn subdivision_quadruples_and_stays_inside() {
        let c = cube();
        let s = subdivide(&c, 2);
        assert_eq!(s.triangles.len(), 12 * 16);
        let b = c.aabb().unwrap().inflate(1e-9);
        assert!(s.vertices.iter().all(|v| b.contains(*v)));
        assert_eq!(s.boundary_edge_count(), 0);
        assert!(s.signed_volume() > 0.0 && s.signed_volume() < 8.0);
    }

    #[test]
    fn subdivision_open_plane() {
        let s = subdivide(&plane(2.0), 1);
        assert_eq!(s.triangles.len(), 8);
    }

    #[test]
    fn bevel_cube_edges() {
        let r = bevel(&cube(), 0.2, 1, BevelAffect::Edges).unwrap();
        let v = r.mesh.signed_volume();
        // 12 edges each lose a prism 0.2*0.2/2*2 = 0.04, corners overlap slightly
        assert!(v < 8.0 - 0.4 && v > 8.0 - 0.5, "{v}");
        assert!(r.mesh.is_closed_surface());
        let b = r.mesh.aabb().unwrap();
        assert!((b.max.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bevel_rounded_removes_less() {
        let flat = bevel(&cube(), 0.2, 1, BevelAffect::Edges).unwrap().mesh.signed_volume();
        let round = bevel(&cube(), 0.2, 4, BevelAffect::Edges).unwrap().mesh.signed_volume();
        assert!(round > flat && round < 8.0);
    }

    #[test]
    fn bevel_vertices_truncates_corners() {
        let r = bevel(&cube(), 0.3, 1, BevelAffect::Vertices).unwrap();
        let v = r.mesh.signed_volume();
        // 8 corner tetrahedra of leg 0.3: 8 * 0.3^3/6 = 0.036
        assert!((v - (8.0 - 0.036)).abs() < 1e-6, "{v}");
    }

    #[test]
    fn smooth_sphere_has_nothing_to_bevel() {
        let s = uv_sphere(32, 16);
        let r = bevel(&s, 0.1, 2, BevelAffect::Edges).unwrap();
        assert_eq!(r.mesh.triangles.len(), s.triangles.len());
    }

    #[test]
    fn bevel_cylinder_rims() {
        let c = cylinder(12, 1.0, 2.0);
        let r = bevel(&c, 0.1, 1, BevelAffect::Edges).unwrap();
        assert!(r.mesh.signed_volume() < c.signed_volume());
        assert!(r.mesh.is_closed_surface());
    }

    #[test]
    fn curve_deform_straight_spine_is_rigid() {
        let target = cube();
        let mut curve = Mesh::empty();
        curve.spine = Some(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)]);
        let r = curve_deform(&target, &curve, "POS_X".parse().unwrap()).unwrap();
        let b = r.aabb().unwrap();
        assert!((b.min - Vec3::new(0.0, -1.0, -1.0)).length() < 1e-12);
        assert!((b.max - Vec3::new(2.0, 1.0, 1.0)).length() < 1e-12);
    }

    #[test]
    fn curve_deform_needs_spine() {
        assert!(curve_deform(&cube(), &cube(), "POS_X".parse().unwrap()).is_err());
        assert!(apply_modifier(
            &cube(),
            &ModifierSpec::Curve {
                deform_axis: "X".parse().unwrap()
            },
            None
        )
        .is_err());
    }

    #[test]
    fn from_params_defaults_and_errors() {
        let m = ModifierSpec::from_params("subdivision", &Params::new()).unwrap();
        assert_eq!(m, ModifierSpec::Subdivision { levels: 2 });
        assert!(ModifierSpec::from_params("twist", &Params::new()).is_err());
        assert!(ModifierSpec::from_params("bevel", &Params::new().text("affect", "FACES")).is_err());
        assert!(ModifierSpec::from_params("subdivision", &Params::new().num("levels", 9.0)).is_err());
    }
}
