//! Mesh booleans on a BSP tree.
//!
//! The tree is stored in an arena and every traversal uses an explicit work
//! stack, so large inputs do not exhaust the thread stack.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::math::{Aabb, Vec3};
use super::mesh::Mesh;
use super::{Built, KernelError};

/// Plane classification tolerance.
pub const PLANE_EPSILON: f64 = 1e-7;
/// Offset applied along vertex normals to the second operand when the two
/// operands share overlapping coplanar faces.
pub const COPLANAR_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BooleanOp {
    Union,
    Difference,
    Intersect,
}

impl BooleanOp {
    pub fn name(self) -> &'static str {
        match self {
            BooleanOp::Union => "UNION",
            BooleanOp::Difference => "DIFFERENCE",
            BooleanOp::Intersect => "INTERSECT",
        }
    }
}

impl fmt::Display for BooleanOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BooleanOp {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "UNION" => Ok(BooleanOp::Union),
            "DIFFERENCE" => Ok(BooleanOp::Difference),
            "INTERSECT" | "INTERSECTION" => Ok(BooleanOp::Intersect),
            _ => Err(KernelError::InvalidParam {
                name: "operation".into(),
                reason: format!("expected UNION, DIFFERENCE or INTERSECT, got '{s}'"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Plane {
    normal: Vec3,
    w: f64,
}

impl Plane {
    fn from_points(a: Vec3, b: Vec3, c: Vec3) -> Option<Plane> {
        let n = (b - a).cross(c - a).try_normalize()?;
        Some(Plane { normal: n, w: n.dot(a) })
    }

    fn flip(&mut self) {
        self.normal = -self.normal;
        self.w = -self.w;
    }
}

#[derive(Debug, Clone)]
struct Polygon {
    vertices: Vec<Vec3>,
    plane: Plane,
}

impl Polygon {
    fn flip(&mut self) {
        self.vertices.reverse();
        self.plane.flip();
    }
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

#[derive(Default)]
struct Split {
    coplanar_front: Vec<Polygon>,
    coplanar_back: Vec<Polygon>,
    front: Vec<Polygon>,
    back: Vec<Polygon>,
}

fn split_polygon(plane: &Plane, poly: Polygon, out: &mut Split) {
    let mut kind = 0u8;
    let types: Vec<u8> = poly
        .vertices
        .iter()
        .map(|v| {
            let t = plane.normal.dot(*v) - plane.w;
            let ty = if t < -PLANE_EPSILON {
                BACK
            } else if t > PLANE_EPSILON {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.normal.dot(poly.plane.normal) > 0.0 {
                out.coplanar_front.push(poly);
            } else {
                out.coplanar_back.push(poly);
            }
        }
        FRONT => out.front.push(poly),
        BACK => out.back.push(poly),
        _ => {
            let n = poly.vertices.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (poly.vertices[i], poly.vertices[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let t = (plane.w - plane.normal.dot(vi)) / plane.normal.dot(vj - vi);
                    let v = vi.lerp(vj, t);
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                out.front.push(Polygon {
                    vertices: f,
                    plane: poly.plane,
                });
            }
            if b.len() >= 3 {
                out.back.push(Polygon {
                    vertices: b,
                    plane: poly.plane,
                });
            }
        }
    }
}

#[derive(Default)]
struct Node {
    plane: Option<Plane>,
    front: Option<usize>,
    back: Option<usize>,
    polygons: Vec<Polygon>,
}

#[derive(Default)]
struct Bsp {
    nodes: Vec<Node>,
}

impl Bsp {
    fn new(polygons: Vec<Polygon>) -> Bsp {
        let mut t = Bsp {
            nodes: vec![Node::default()],
        };
        t.build(polygons);
        t
    }

    fn child(&mut self, node: usize, front: bool) -> usize {
        let existing = if front { self.nodes[node].front } else { self.nodes[node].back };
        if let Some(c) = existing {
            return c;
        }
        self.nodes.push(Node::default());
        let c = self.nodes.len() - 1;
        if front {
            self.nodes[node].front = Some(c);
        } else {
            self.nodes[node].back = Some(c);
        }
        c
    }

    fn build(&mut self, polygons: Vec<Polygon>) {
        let mut stack = vec![(0usize, polygons)];
        while let Some((idx, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            let plane = *self.nodes[idx].plane.get_or_insert(polys[0].plane);
            let mut s = Split::default();
            for p in polys {
                split_polygon(&plane, p, &mut s);
            }
            let node = &mut self.nodes[idx];
            node.polygons.append(&mut s.coplanar_front);
            node.polygons.append(&mut s.coplanar_back);
            if !s.front.is_empty() {
                let c = self.child(idx, true);
                stack.push((c, s.front));
            }
            if !s.back.is_empty() {
                let c = self.child(idx, false);
                stack.push((c, s.back));
            }
        }
    }

    fn invert(&mut self) {
        for node in &mut self.nodes {
            for p in &mut node.polygons {
                p.flip();
            }
            if let Some(pl) = &mut node.plane {
                pl.flip();
            }
            std::mem::swap(&mut node.front, &mut node.back);
        }
    }

    /// Removes the parts of `polygons` inside this solid.
    fn clip_polygons(&self, polygons: Vec<Polygon>) -> Vec<Polygon> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, polygons)];
        while let Some((idx, polys)) = stack.pop() {
            let node = &self.nodes[idx];
            let Some(plane) = node.plane else {
                out.extend(polys);
                continue;
            };
            let mut s = Split::default();
            for p in polys {
                split_polygon(&plane, p, &mut s);
            }
            let mut front = s.front;
            front.append(&mut s.coplanar_front);
            let mut back = s.back;
            back.append(&mut s.coplanar_back);
            match node.front {
                Some(c) => stack.push((c, front)),
                None => out.extend(front),
            }
            if let Some(c) = node.back {
                stack.push((c, back));
            }
        }
        out
    }

    fn clip_to(&mut self, other: &Bsp) {
        for i in 0..self.nodes.len() {
            let polys = std::mem::take(&mut self.nodes[i].polygons);
            self.nodes[i].polygons = other.clip_polygons(polys);
        }
    }

    fn all_polygons(&self) -> Vec<Polygon> {
        self.nodes.iter().flat_map(|n| n.polygons.iter().cloned()).collect()
    }
}

fn to_polygons(mesh: &Mesh) -> Vec<Polygon> {
    mesh.triangle_positions()
        .filter_map(|[a, b, c]| {
            Plane::from_points(a, b, c).map(|plane| Polygon {
                vertices: vec![a, b, c],
                plane,
            })
        })
        .collect()
}

fn from_polygons(polys: &[Polygon]) -> Mesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for p in polys {
        let base = vertices.len() as u32;
        vertices.extend_from_slice(&p.vertices);
        for k in 1..p.vertices.len() as u32 - 1 {
            let (a, b, c) = (p.vertices[0], p.vertices[k as usize], p.vertices[k as usize + 1]);
            if (b - a).cross(c - a).length() > 1e-14 {
                triangles.push([base, base + k, base + k + 1]);
            }
        }
    }
    Mesh::new(vertices, triangles).welded().compacted()
}

fn plane_key(p: &Plane) -> [i64; 4] {
    // orientation-independent: flip so the first significant component is positive
    let (mut n, mut w) = (p.normal, p.w);
    let first = if n.x.abs() > 1e-9 {
        n.x
    } else if n.y.abs() > 1e-9 {
        n.y
    } else {
        n.z
    };
    if first < 0.0 {
        n = -n;
        w = -w;
    }
    let q = |v: f64| (v * 1e5).round() as i64;
    [q(n.x), q(n.y), q(n.z), q(w)]
}

/// True when some face of `a` lies in the plane of an overlapping face of `b`.
pub fn has_overlapping_coplanar_faces(a: &Mesh, b: &Mesh) -> bool {
    let mut buckets: HashMap<[i64; 4], Vec<Aabb>> = HashMap::new();
    for tri in a.triangle_positions() {
        if let Some(p) = Plane::from_points(tri[0], tri[1], tri[2]) {
            buckets
                .entry(plane_key(&p))
                .or_default()
                .push(Aabb::from_points(&tri).expect("triangle"));
        }
    }
    b.triangle_positions().any(|tri| {
        let Some(p) = Plane::from_points(tri[0], tri[1], tri[2]) else {
            return false;
        };
        let bb = Aabb::from_points(&tri).expect("triangle");
        buckets.get(&plane_key(&p)).is_some_and(|boxes| {
            boxes.iter().any(|o| {
                // overlap must have positive area, not just a shared edge
                let inter = Aabb::new(o.min.max(bb.min), o.max.min(bb.max));
                let e = inter.extent();
                let positive = [e.x, e.y, e.z].iter().filter(|&&d| d > 1e-9).count();
                (0..3).all(|k| e[k] >= -1e-9) && positive >= 2
            })
        })
    })
}

fn nudge_outward(mesh: &Mesh, by: f64) -> Mesh {
    let welded = mesh.welded();
    let normals = welded.vertex_normals();
    let mut out = welded;
    for (v, n) in out.vertices.iter_mut().zip(normals) {
        *v += n * by;
    }
    out
}

fn check_operand(mesh: &Mesh, which: &str) -> Result<(), KernelError> {
    if !mesh.is_closed_surface() {
        return Err(KernelError::NonManifoldOperand(format!(
            "{which} operand is not a closed surface"
        )));
    }
    Ok(())
}

/// Boolean of two closed meshes.
pub fn boolean(a: &Mesh, b: &Mesh, op: BooleanOp) -> Result<Built, KernelError> {
    if !a.has_surface() {
        return Err(KernelError::EmptyMesh);
    }
    check_operand(a, "first")?;
    check_operand(b, "second")?;
    let mut warnings = Vec::new();
    let b = if has_overlapping_coplanar_faces(a, b) {
        warnings.push(format!(
            "coplanar faces between boolean operands; second operand offset by {COPLANAR_NUDGE:e} along its normals"
        ));
        nudge_outward(b, COPLANAR_NUDGE)
    } else {
        b.clone()
    };
    let mut ta = Bsp::new(to_polygons(a));
    let mut tb = Bsp::new(to_polygons(&b));
    match op {
        BooleanOp::Union => {
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
        }
        BooleanOp::Difference => {
            ta.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
            ta.invert();
        }
        BooleanOp::Intersect => {
            ta.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            ta.build(tb.all_polygons());
            ta.invert();
        }
    }
    let mut mesh = from_polygons(&ta.all_polygons());
    mesh.component_tag = a.component_tag.clone();
    Ok(Built { mesh, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::math::Transform;
    use crate::geometry::primitives::{cube, uv_sphere};

    fn moved(m: &Mesh, p: Vec3) -> Mesh {
        m.transformed(&Transform::translation(p))
    }

    #[test]
    fn disjoint_union_adds_volume() {
        let r = boolean(&cube(), &moved(&cube(), Vec3::new(5.0, 0.0, 0.0)), BooleanOp::Union).unwrap();
        assert!((r.mesh.signed_volume() - 16.0).abs() < 16.0 * 1e-6);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn self_difference_is_empty() {
        let r = boolean(&cube(), &cube(), BooleanOp::Difference).unwrap();
        assert!(r.mesh.signed_volume().abs() < 1e-6);
        assert_eq!(r.mesh.triangles.len(), 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn corner_intersection() {
        let r = boolean(&cube(), &moved(&cube(), Vec3::splat(1.5)), BooleanOp::Intersect).unwrap();
        assert!((r.mesh.signed_volume() - 0.125).abs() < 1e-6);
        let b = r.mesh.aabb().unwrap();
        assert!((b.min - Vec3::splat(0.5)).length() < 1e-9);
    }

    #[test]
    fn sphere_minus_cube_half() {
        let s = uv_sphere(24, 12);
        let half = moved(&cube(), Vec3::new(1.0, 0.0, 0.0)).transformed(&Transform::new(
            Vec3::ZERO,
            Vec3::ZERO,
            Vec3::new(1.0, 2.0, 2.0),
        ));
        let r = boolean(&s, &half, BooleanOp::Difference).unwrap();
        let v = r.mesh.signed_volume();
        assert!((v - s.signed_volume() / 2.0).abs() < 1e-6, "{v}");
        assert!(r.mesh.is_closed_surface());
    }

    #[test]
    fn open_operand_rejected() {
        let p = crate::geometry::primitives::plane(2.0);
        assert!(matches!(
            boolean(&cube(), &p, BooleanOp::Union),
            Err(KernelError::NonManifoldOperand(_))
        ));
    }

    #[test]
    fn op_names() {
        assert_eq!("union".parse::<BooleanOp>().unwrap(), BooleanOp::Union);
        assert!("XOR".parse::<BooleanOp>().is_err());
    }
}
