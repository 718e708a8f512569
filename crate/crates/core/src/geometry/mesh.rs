use std::collections::HashMap;

use super::math::{Aabb, Affine, Transform, Vec3};
use super::KernelError;

/// Indexed triangle mesh.
///
/// Triangles wind counter-clockwise when seen from outside, so face normals
/// point out of closed solids and [`Mesh::signed_volume`] is positive.
///
/// Curve objects additionally carry their `spine`, the sampled centre line,
/// so they can drive a curve deform even when they have no surface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub component_tag: Option<String>,
    pub spine: Option<Vec<Vec3>>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            vertices,
            triangles,
            component_tag: None,
            spine: None,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.component_tag = Some(tag.into());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty() && self.vertices.is_empty()
    }

    pub fn has_surface(&self) -> bool {
        !self.triangles.is_empty()
    }

    /// Checks the structural invariants: indices in range, no repeated
    /// index within a triangle, finite coordinates.
    pub fn validate(&self) -> Result<(), KernelError> {
        let n = self.vertices.len() as u32;
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(KernelError::InvalidMesh(format!("triangle {i} indexes past {n} vertices")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(KernelError::InvalidMesh(format!("triangle {i} repeats a vertex index")));
            }
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(KernelError::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(())
    }

    pub fn aabb(&self) -> Result<Aabb, KernelError> {
        compute_aabb(self)
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_positions(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.triangles.len()).map(move |i| self.triangle(i))
    }

    /// Unnormalised face normal (length = twice the area).
    pub fn face_cross(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(c - a)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.face_cross(i).length() * 0.5).sum()
    }

    /// Volume by the divergence theorem; positive for outward-wound closed meshes.
    pub fn signed_volume(&self) -> f64 {
        self.triangle_positions().map(|[a, b, c]| a.dot(b.cross(c)) / 6.0).sum()
    }

    /// Sum of area-weighted face normals. Vanishes for any closed surface,
    /// including ones with T-junctions.
    pub fn vector_area(&self) -> Vec3 {
        let mut acc = Vec3::ZERO;
        for i in 0..self.triangles.len() {
            acc += self.face_cross(i) * 0.5;
        }
        acc
    }

    /// Closedness test tolerant of T-junctions: the vector area must vanish
    /// relative to the total area.
    pub fn is_closed_surface(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let area = self.surface_area();
        area > 0.0 && self.vector_area().length() <= 1e-6 * area
    }

    /// Number of index-level edges used by exactly one triangle.
    pub fn boundary_edge_count(&self) -> usize {
        let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        counts.values().filter(|&&c| c == 1).count()
    }

    /// Appends `other`'s geometry, keeping this mesh's tag.
    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }

    pub fn concat<'a>(meshes: impl IntoIterator<Item = &'a Mesh>) -> Mesh {
        let mut out = Mesh::empty();
        for m in meshes {
            out.append(m);
        }
        out
    }

    pub fn transformed(&self, t: &Transform) -> Mesh {
        transform(self, t)
    }

    pub fn map_affine(&self, a: &Affine) -> Mesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v = a.apply(*v);
        }
        if let Some(spine) = &mut out.spine {
            for v in spine {
                *v = a.apply(*v);
            }
        }
        if a.determinant() < 0.0 {
            out.flip_winding();
        }
        out
    }

    pub fn flip_winding(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    /// Merges vertices with bit-identical positions and drops triangles that
    /// collapse as a result.
    pub fn welded(&self) -> Mesh {
        let mut map: HashMap<[u64; 3], u32> = HashMap::new();
        let mut verts = Vec::new();
        let mut remap = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            // +0.0 and -0.0 must weld together.
            let key = [(v.x + 0.0).to_bits(), (v.y + 0.0).to_bits(), (v.z + 0.0).to_bits()];
            let idx = *map.entry(key).or_insert_with(|| {
                verts.push(*v);
                (verts.len() - 1) as u32
            });
            remap.push(idx);
        }
        let tris = self
            .triangles
            .iter()
            .map(|t| [remap[t[0] as usize], remap[t[1] as usize], remap[t[2] as usize]])
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
            .collect();
        Mesh {
            vertices: verts,
            triangles: tris,
            component_tag: self.component_tag.clone(),
            spine: self.spine.clone(),
        }
    }

    /// Angle-weighted vertex normals (zero for isolated vertices). Insensitive
    /// to how planar faces happen to be triangulated.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut n = vec![Vec3::ZERO; self.vertices.len()];
        for (i, t) in self.triangles.iter().enumerate() {
            let Some(f) = self.face_cross(i).try_normalize() else {
                continue;
            };
            for k in 0..3 {
                let p = self.vertices[t[k] as usize];
                let a = self.vertices[t[(k + 1) % 3] as usize] - p;
                let b = self.vertices[t[(k + 2) % 3] as usize] - p;
                let angle = a.cross(b).length().atan2(a.dot(b));
                n[t[k] as usize] += f * angle;
            }
        }
        n.into_iter().map(Vec3::normalize_or_zero).collect()
    }

    /// Drops vertices no triangle references. Curve spines are kept.
    pub fn compacted(&self) -> Mesh {
        let mut used = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let mut tris = Vec::with_capacity(self.triangles.len());
        for t in &self.triangles {
            let mut nt = [0u32; 3];
            for k in 0..3 {
                let v = t[k] as usize;
                if used[v] == u32::MAX {
                    used[v] = verts.len() as u32;
                    verts.push(self.vertices[v]);
                }
                nt[k] = used[v];
            }
            tris.push(nt);
        }
        Mesh {
            vertices: verts,
            triangles: tris,
            component_tag: self.component_tag.clone(),
            spine: self.spine.clone(),
        }
    }
}

/// Componentwise bounds of the mesh vertices.
pub fn compute_aabb(mesh: &Mesh) -> Result<Aabb, KernelError> {
    Aabb::from_points(&mesh.vertices).ok_or(KernelError::EmptyMesh)
}

/// Scale, then rotate (X, Y, Z), then translate every vertex. Topology is kept;
/// mirroring scales flip the winding so normals stay outward.
pub fn transform(mesh: &Mesh, t: &Transform) -> Mesh {
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = t.apply_point(*v);
    }
    if let Some(spine) = &mut out.spine {
        for v in spine {
            *v = t.apply_point(*v);
        }
    }
    if t.scale.x * t.scale.y * t.scale.z < 0.0 {
        out.flip_winding();
    }
    out
}
