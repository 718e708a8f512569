//! Closed primitive solids (plus the open plane).
//!
//! Every builder produces geometry centred on the origin, then applies the
//! `position` / `rotation` / `scale` keywords. Sizes follow the usual DCC
//! defaults: cube and plane have half-extent 1, round solids have radius 1
//! and `depth` / `height` is the full z-extent.
//!
//! Vertex and triangle counts:
//!
//! | kind     | vertices            | triangles     |
//! |----------|---------------------|---------------|
//! | cube     | 8                   | 12            |
//! | sphere   | S(R-1) + 2          | 2S(R-1)       |
//! | cylinder | 2n + 2              | 4n            |
//! | cone     | n + 2               | 2n            |
//! | plane    | 4                   | 2             |
//! | pyramid  | 5                   | 6             |
//! | capsule  | 2HS + 2, H=max(2,S/4) | 4HS         |
//! | prism    | 2n + 2              | 4n            |

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use super::math::Vec3;
use super::mesh::Mesh;
use super::params::Params;
use super::{Built, KernelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    Cube,
    Sphere,
    Cylinder,
    Cone,
    Plane,
    Pyramid,
    Capsule,
    Prism,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 8] = [
        PrimitiveKind::Cube,
        PrimitiveKind::Sphere,
        PrimitiveKind::Cylinder,
        PrimitiveKind::Cone,
        PrimitiveKind::Plane,
        PrimitiveKind::Pyramid,
        PrimitiveKind::Capsule,
        PrimitiveKind::Prism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Cube => "cube",
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::Cone => "cone",
            PrimitiveKind::Plane => "plane",
            PrimitiveKind::Pyramid => "pyramid",
            PrimitiveKind::Capsule => "capsule",
            PrimitiveKind::Prism => "prism",
        }
    }

    pub fn is_closed(self) -> bool {
        self != PrimitiveKind::Plane
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for PrimitiveKind {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PrimitiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KernelError::UnknownPrimitive(s.to_string()))
    }
}

/// Capsule latitude bands per hemisphere.
pub fn capsule_bands(segments: usize) -> usize {
    (segments / 4).max(2)
}

/// Builds a primitive and applies its transform keywords.
pub fn make_primitive(kind: PrimitiveKind, params: &Params) -> Result<Built, KernelError> {
    let local = match kind {
        PrimitiveKind::Cube => cube(),
        PrimitiveKind::Sphere => uv_sphere(params.count("segments", 32, 3)?, params.count("rings", 16, 3)?),
        PrimitiveKind::Cylinder => {
            let n = params.count("vertices", 32, 3)?;
            let depth = params.positive("depth", 2.0)?;
            let radius = params.positive("radius", 1.0)?;
            cylinder(n, radius, depth)
        }
        PrimitiveKind::Cone => cone(
            params.count("vertices", 32, 3)?,
            params.positive("radius", 1.0)?,
            params.positive("depth", 2.0)?,
        ),
        PrimitiveKind::Plane => plane(params.positive("size", 2.0)?),
        PrimitiveKind::Pyramid => pyramid(params.positive("base_size", 2.0)?, params.positive("height", 2.0)?),
        PrimitiveKind::Capsule => capsule(
            params.positive("radius", 1.0)?,
            params.positive("height", 2.0)?,
            params.count("segments", 32, 3)?,
        ),
        PrimitiveKind::Prism => cylinder(
            params.count("sides", 3, 3)?,
            params.positive("radius", 1.0)?,
            params.positive("height", 2.0)?,
        ),
    };
    let t = params.transform()?;
    let mut warnings = Vec::new();
    if t.scale.x == 0.0 || t.scale.y == 0.0 || t.scale.z == 0.0 {
        warnings.push(format!("{kind} has a zero scale component; the result is flat"));
    }
    Ok(Built {
        mesh: local.transformed(&t),
        warnings,
    })
}

fn push_quad(tris: &mut Vec<[u32; 3]>, a: u32, b: u32, c: u32, d: u32) {
    tris.push([a, b, c]);
    tris.push([a, c, d]);
}

pub fn cube() -> Mesh {
    let vertices = (0..8)
        .map(|i| {
            let s = |bit: u32| if i & bit != 0 { 1.0 } else { -1.0 };
            Vec3::new(s(1), s(2), s(4))
        })
        .collect();
    let mut tris = Vec::with_capacity(12);
    push_quad(&mut tris, 0, 2, 3, 1);
    push_quad(&mut tris, 4, 5, 7, 6);
    push_quad(&mut tris, 0, 1, 5, 4);
    push_quad(&mut tris, 2, 6, 7, 3);
    push_quad(&mut tris, 0, 4, 6, 2);
    push_quad(&mut tris, 1, 3, 7, 5);
    Mesh::new(vertices, tris)
}

/// Closed surface of revolution about z from a list of rings (top to bottom)
/// between two poles. Each ring is `(z, radius)`.
fn revolve(top: f64, rings: &[(f64, f64)], bottom: f64, segments: usize) -> Mesh {
    let s = segments as u32;
    let mut vertices = Vec::with_capacity(rings.len() * segments + 2);
    vertices.push(Vec3::new(0.0, 0.0, top));
    for &(z, r) in rings {
        for j in 0..segments {
            let phi = TAU * j as f64 / segments as f64;
            vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
        }
    }
    let bottom_idx = vertices.len() as u32;
    vertices.push(Vec3::new(0.0, 0.0, bottom));

    let ring = |k: usize, j: u32| 1 + k as u32 * s + (j % s);
    let mut tris = Vec::with_capacity(2 * segments * rings.len());
    for j in 0..s {
        tris.push([0, ring(0, j), ring(0, j + 1)]);
    }
    for k in 0..rings.len() - 1 {
        for j in 0..s {
            push_quad(&mut tris, ring(k, j), ring(k + 1, j), ring(k + 1, j + 1), ring(k, j + 1));
        }
    }
    let last = rings.len() - 1;
    for j in 0..s {
        tris.push([bottom_idx, ring(last, j + 1), ring(last, j)]);
    }
    Mesh::new(vertices, tris)
}

pub fn uv_sphere(segments: usize, rings: usize) -> Mesh {
    let bands: Vec<(f64, f64)> = (1..rings)
        .map(|k| {
            let theta = PI * k as f64 / rings as f64;
            (theta.cos(), theta.sin())
        })
        .collect();
    revolve(1.0, &bands, -1.0, segments)
}

/// Capped cylinder with centre-fan caps; also the n-sided prism.
pub fn cylinder(n: usize, radius: f64, depth: f64) -> Mesh {
    let s = n as u32;
    let h = depth / 2.0;
    let mut vertices = Vec::with_capacity(2 * n + 2);
    for z in [-h, h] {
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            vertices.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), z));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -h));
    vertices.push(Vec3::new(0.0, 0.0, h));
    let (bc, tc) = (2 * s, 2 * s + 1);
    let bot = |j: u32| j % s;
    let top = |j: u32| s + j % s;
    let mut tris = Vec::with_capacity(4 * n);
    for j in 0..s {
        push_quad(&mut tris, bot(j), bot(j + 1), top(j + 1), top(j));
        tris.push([tc, top(j), top(j + 1)]);
        tris.push([bc, bot(j + 1), bot(j)]);
    }
    Mesh::new(vertices, tris)
}

pub fn cone(n: usize, radius: f64, depth: f64) -> Mesh {
    let s = n as u32;
    let h = depth / 2.0;
    let mut vertices = Vec::with_capacity(n + 2);
    for j in 0..n {
        let phi = TAU * j as f64 / n as f64;
        vertices.push(Vec3::new(radius * phi.cos(), radius * phi.sin(), -h));
    }
    vertices.push(Vec3::new(0.0, 0.0, h));
    vertices.push(Vec3::new(0.0, 0.0, -h));
    let (apex, bc) = (s, s + 1);
    let mut tris = Vec::with_capacity(2 * n);
    for j in 0..s {
        tris.push([j, (j + 1) % s, apex]);
        tris.push([bc, (j + 1) % s, j]);
    }
    Mesh::new(vertices, tris)
}

/// Square in the xy-plane facing +z, side length `size`.
pub fn plane(size: f64) -> Mesh {
    let h = size / 2.0;
    Mesh::new(
        vec![
            Vec3::new(-h, -h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(-h, h, 0.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

/// Square-based pyramid, base at `z = -height/2`, apex at `+height/2`.
pub fn pyramid(base_size: f64, height: f64) -> Mesh {
    let b = base_size / 2.0;
    let h = height / 2.0;
    let vertices = vec![
        Vec3::new(-b, -b, -h),
        Vec3::new(b, -b, -h),
        Vec3::new(b, b, -h),
        Vec3::new(-b, b, -h),
        Vec3::new(0.0, 0.0, h),
    ];
    let tris = vec![[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
    Mesh::new(vertices, tris)
}

/// Cylinder of length `height` with hemispherical ends of radius `radius`.
pub fn capsule(radius: f64, height: f64, segments: usize) -> Mesh {
    let bands = capsule_bands(segments);
    let h = height / 2.0;
    let mut rings = Vec::with_capacity(2 * bands);
    for k in 1..=bands {
        let a = FRAC_PI_2 * k as f64 / bands as f64;
        rings.push((h + radius * a.cos(), radius * a.sin()));
    }
    for k in (1..=bands).rev() {
        let a = FRAC_PI_2 * k as f64 / bands as f64;
        rings.push((-h - radius * a.cos(), radius * a.sin()));
    }
    revolve(h + radius, &rings, -h - radius, segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trip() {
        for k in PrimitiveKind::ALL {
            assert_eq!(k.name().parse::<PrimitiveKind>().unwrap(), k);
        }
        assert!(matches!("torus".parse::<PrimitiveKind>(), Err(KernelError::UnknownPrimitive(_))));
    }

    #[test]
    fn default_cube() {
        let m = make_primitive(PrimitiveKind::Cube, &Params::new()).unwrap().mesh;
        assert_eq!((m.vertices.len(), m.triangles.len()), (8, 12));
        let b = m.aabb().unwrap();
        assert_eq!(b.min, Vec3::splat(-1.0));
        assert_eq!(b.max, Vec3::splat(1.0));
        assert!((m.signed_volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn pyramid_counts() {
        let p = Params::new().num("base_size", 2.0).num("height", 2.0);
        let m = make_primitive(PrimitiveKind::Pyramid, &p).unwrap().mesh;
        assert_eq!((m.vertices.len(), m.triangles.len()), (5, 6));
        assert!((m.signed_volume() - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        let p = Params::new().num("segments", 2.0);
        assert!(matches!(
            make_primitive(PrimitiveKind::Sphere, &p),
            Err(KernelError::InvalidParam { .. })
        ));
        let p = Params::new().num("depth", 0.0);
        assert!(make_primitive(PrimitiveKind::Cylinder, &p).is_err());
        let p = Params::new().num("sides", 4.5);
        assert!(make_primitive(PrimitiveKind::Prism, &p).is_err());
    }

    #[test]
    fn zero_scale_warns() {
        let p = Params::new().vec3("scale", Vec3::new(1.0, 0.0, 1.0));
        let b = make_primitive(PrimitiveKind::Cube, &p).unwrap();
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn capsule_extent() {
        let m = capsule(0.5, 2.0, 16);
        let b = m.aabb().unwrap();
        assert!((b.max.z - 1.5).abs() < 1e-12 && (b.min.z + 1.5).abs() < 1e-12);
        assert!(m.signed_volume() > 0.0);
    }
}
