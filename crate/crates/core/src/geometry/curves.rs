//! Curve objects: sampled centre lines that become tubes (bevel), ribbons
//! (extrude) or both.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use super::math::Vec3;
use super::mesh::Mesh;
use super::params::Params;
use super::{Built, KernelError};

/// Cross-section resolution of bevelled tubes. A multiple of four so the
/// section has vertices exactly on the frame axes.
pub const TUBE_SEGMENTS: usize = 16;
/// Samples per span of a smooth Bezier curve.
pub const BEZIER_RESOLUTION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    Bezier,
    Circle,
    Polyline,
}

impl CurveKind {
    pub const ALL: [CurveKind; 3] = [CurveKind::Bezier, CurveKind::Circle, CurveKind::Polyline];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Bezier => "bezier_curve",
            CurveKind::Circle => "circle",
            CurveKind::Polyline => "polyline",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CurveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KernelError::UnknownPrimitive(s.to_string()))
    }
}

/// A sampled curve. Closed curves do not repeat their first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec3>,
    pub closed: bool,
}

impl Polyline {
    /// Spine representation stored on meshes: closed loops repeat the first point.
    pub fn spine(&self) -> Vec<Vec3> {
        let mut s = self.points.clone();
        if self.closed {
            s.push(self.points[0]);
        }
        s
    }
}

fn check_distinct(points: &[Vec3], closed: bool) -> Result<(), KernelError> {
    for (i, w) in points.windows(2).enumerate() {
        if w[0].distance(w[1]) < 1e-12 {
            return Err(KernelError::DegenerateCurve(format!(
                "points {} and {} coincide",
                i,
                i + 1
            )));
        }
    }
    if closed && points.len() > 2 && points[0].distance(points[points.len() - 1]) < 1e-12 {
        return Err(KernelError::DegenerateCurve("first and last points coincide".into()));
    }
    Ok(())
}

/// Smooth curve through every control point, cubic spans with automatic
/// (Catmull-Rom) handles.
pub fn bezier_samples(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len();
    let mut out = Vec::with_capacity((n - 1) * BEZIER_RESOLUTION + 1);
    for i in 0..n - 1 {
        let p0 = points[i];
        let p3 = points[i + 1];
        let prev = if i == 0 { p0 } else { points[i - 1] };
        let next = if i + 2 < n { points[i + 2] } else { p3 };
        let p1 = p0 + (p3 - prev) / 6.0;
        let p2 = p3 - (next - p0) / 6.0;
        for k in 0..BEZIER_RESOLUTION {
            let t = k as f64 / BEZIER_RESOLUTION as f64;
            let u = 1.0 - t;
            out.push(p0 * (u * u * u) + p1 * (3.0 * u * u * t) + p2 * (3.0 * u * t * t) + p3 * (t * t * t));
        }
    }
    out.push(points[n - 1]);
    out
}

/// Tangents: segment direction at open ends, bisector at interior samples.
fn tangents(curve: &Polyline) -> Vec<Vec3> {
    let p = &curve.points;
    let n = p.len();
    (0..n)
        .map(|i| {
            let prev = if i > 0 {
                Some(p[i] - p[i - 1])
            } else if curve.closed {
                Some(p[0] - p[n - 1])
            } else {
                None
            };
            let next = if i + 1 < n {
                Some(p[i + 1] - p[i])
            } else if curve.closed {
                Some(p[0] - p[n - 1])
            } else {
                None
            };
            match (prev, next) {
                (Some(a), Some(b)) => {
                    let s = a.normalize_or_zero() + b.normalize_or_zero();
                    s.try_normalize().unwrap_or_else(|| b.normalize_or_zero())
                }
                (Some(a), None) => a.normalize_or_zero(),
                (None, Some(b)) => b.normalize_or_zero(),
                (None, None) => Vec3::X,
            }
        })
        .collect()
}

/// Rotation-minimising frame along the curve (double reflection).
///
/// `reference` picks the initial normal: its projection onto the plane
/// normal to the first tangent becomes `B`, and `N = B x T`. Closed loops
/// spread the closure mismatch evenly.
pub fn rotation_minimizing_frames(curve: &Polyline, reference: Vec3) -> Vec<(Vec3, Vec3, Vec3)> {
    let p = &curve.points;
    let t = tangents(curve);
    let n = p.len();
    let b0 = {
        let proj = reference - t[0] * reference.dot(t[0]);
        proj.try_normalize().unwrap_or_else(|| t[0].any_perpendicular())
    };
    let mut frames = Vec::with_capacity(n);
    frames.push((t[0], b0.cross(t[0]), b0));
    for i in 0..n - 1 {
        frames.push(reflect_frame(frames[i], p[i], p[i + 1], t[i + 1]));
    }
    if curve.closed && n > 2 {
        let (_, n_end, b_end) = reflect_frame(frames[n - 1], p[n - 1], p[0], t[0]);
        let n0 = frames[0].1;
        // rotation about T0 taking the transported frame back onto the start frame
        let angle = n0.dot(b_end).atan2(n0.dot(n_end));
        let angle = if angle.is_finite() { angle } else { 0.0 };
        for (i, f) in frames.iter_mut().enumerate() {
            let a = angle * i as f64 / n as f64;
            let (s, c) = a.sin_cos();
            let (ti, ni, bi) = *f;
            *f = (ti, ni * c + bi * s, bi * c - ni * s);
        }
    }
    frames
}

fn reflect_frame(f: (Vec3, Vec3, Vec3), a: Vec3, b: Vec3, t_next: Vec3) -> (Vec3, Vec3, Vec3) {
    let (t, _n, bn) = f;
    let v1 = b - a;
    let c1 = v1.dot(v1);
    if c1 < 1e-300 {
        return (t_next, bn.cross(t_next), bn);
    }
    let bl = bn - v1 * (2.0 / c1 * v1.dot(bn));
    let tl = t - v1 * (2.0 / c1 * v1.dot(t));
    let v2 = t_next - tl;
    let c2 = v2.dot(v2);
    let b_next = if c2 < 1e-300 { bl } else { bl - v2 * (2.0 / c2 * v2.dot(bl)) };
    let b_next = (b_next - t_next * b_next.dot(t_next)).normalize_or_zero();
    (t_next, b_next.cross(t_next), b_next)
}

fn push_quad(tris: &mut Vec<[u32; 3]>, a: u32, b: u32, c: u32, d: u32) {
    tris.push([a, b, c]);
    tris.push([a, c, d]);
}

/// Cross-section offsets `(along N, along B)`: a circle of `radius`, split
/// into a stadium when `stretch > 0`.
fn profile(radius: f64, stretch: f64) -> Vec<(f64, f64)> {
    let k = TUBE_SEGMENTS;
    if stretch <= 0.0 {
        return (0..k)
            .map(|j| {
                let th = TAU * j as f64 / k as f64;
                (radius * th.cos(), radius * th.sin())
            })
            .collect();
    }
    let half = k / 2;
    let mut out = Vec::with_capacity(k + 2);
    for j in 0..=half {
        let th = PI * j as f64 / half as f64;
        out.push((radius * th.cos(), radius * th.sin() + stretch));
    }
    for j in 0..half {
        let th = PI + PI * j as f64 / half as f64;
        out.push((radius * th.cos(), radius * th.sin() - stretch));
    }
    out.push((radius, -stretch));
    out
}

/// Sweeps a circular (or stadium) section along the curve.
pub fn sweep_tube(curve: &Polyline, radius: f64, stretch: f64, fill_caps: bool) -> Mesh {
    let frames = rotation_minimizing_frames(curve, Vec3::Z);
    let prof = profile(radius, stretch);
    let k = prof.len() as u32;
    let n = curve.points.len();
    let tans = tangents(curve);
    let mut vertices = Vec::with_capacity(n * prof.len() + 2);
    for (i, (&c, &(_, nn, bb))) in curve.points.iter().zip(frames.iter()).enumerate() {
        // miter: stretch the section along the bend direction at corners
        let (bend, scale) = corner_miter(curve, i, &tans);
        for &(u, v) in &prof {
            let mut o = nn * u + bb * v;
            if scale > 1.0 {
                o += bend * (o.dot(bend) * (scale - 1.0));
            }
            vertices.push(c + o);
        }
    }
    let ring = |i: usize, j: u32| (i as u32) * k + (j % k);
    let mut tris = Vec::new();
    let spans = if curve.closed { n } else { n - 1 };
    for i in 0..spans {
        let i2 = (i + 1) % n;
        for j in 0..k {
            push_quad(&mut tris, ring(i, j), ring(i, j + 1), ring(i2, j + 1), ring(i2, j));
        }
    }
    if fill_caps && !curve.closed {
        let start = vertices.len() as u32;
        vertices.push(curve.points[0]);
        let end = vertices.len() as u32;
        vertices.push(curve.points[n - 1]);
        for j in 0..k {
            tris.push([start, ring(0, j + 1), ring(0, j)]);
            tris.push([end, ring(n - 1, j), ring(n - 1, j + 1)]);
        }
    }
    Mesh::new(vertices, tris)
}

fn corner_miter(curve: &Polyline, i: usize, tans: &[Vec3]) -> (Vec3, f64) {
    let p = &curve.points;
    let n = p.len();
    let interior = curve.closed || (i > 0 && i + 1 < n);
    if !interior || n < 3 {
        return (Vec3::ZERO, 1.0);
    }
    let prev = p[i] - p[(i + n - 1) % n];
    let next = p[(i + 1) % n] - p[i];
    let (Some(d1), Some(d2)) = (prev.try_normalize(), next.try_normalize()) else {
        return (Vec3::ZERO, 1.0);
    };
    let cos_half = d1.dot(tans[i]).clamp(0.25, 1.0);
    match (d2 - d1).try_normalize() {
        Some(bend) => (bend, 1.0 / cos_half),
        None => (Vec3::ZERO, 1.0),
    }
}

/// Extrudes the curve along world z into a ribbon spanning `z +- extrude`;
/// closed curves with `fill_caps` get triangulated lids.
pub fn extrude_ribbon(curve: &Polyline, extrude: f64, fill_caps: bool) -> Mesh {
    let n = curve.points.len() as u32;
    let mut vertices: Vec<Vec3> = curve.points.iter().map(|p| *p - Vec3::Z * extrude).collect();
    vertices.extend(curve.points.iter().map(|p| *p + Vec3::Z * extrude));
    let mut tris = Vec::new();
    let spans = if curve.closed { n } else { n - 1 };
    for i in 0..spans {
        let i2 = (i + 1) % n;
        push_quad(&mut tris, i, i2, n + i2, n + i);
    }
    if fill_caps && curve.closed {
        let lid = triangulate_xy(&curve.points);
        // ear clipping returns CCW (seen from +z) triangles when the loop is CCW
        let ccw = signed_area_xy(&curve.points) >= 0.0;
        for [a, b, c] in lid {
            let (a, b, c) = (a as u32, b as u32, c as u32);
            if ccw {
                tris.push([n + a, n + b, n + c]);
                tris.push([a, c, b]);
            } else {
                tris.push([n + a, n + c, n + b]);
                tris.push([a, b, c]);
            }
        }
        if !ccw {
            // side walls of a clockwise loop face inward; flip them
            for t in tris.iter_mut().take(2 * spans as usize) {
                t.swap(1, 2);
            }
        }
    }
    Mesh::new(vertices, tris)
}

pub fn signed_area_xy(points: &[Vec3]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Ear-clipping triangulation of a simple polygon projected onto xy.
/// Output triangles follow the input orientation.
pub fn triangulate_xy(points: &[Vec3]) -> Vec<[usize; 3]> {
    let orient = if signed_area_xy(points) >= 0.0 { 1.0 } else { -1.0 };
    let cross = |a: Vec3, b: Vec3, c: Vec3| ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) * orient;
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut out = Vec::new();
    let mut guard = 0;
    while idx.len() > 3 && guard < points.len() * points.len() {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (points[ia], points[ib], points[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = points[j];
                cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // self-intersecting input: fall back to a fan
            break;
        }
    }
    for k in 1..idx.len().saturating_sub(1) {
        out.push([idx[0], idx[k], idx[k + 1]]);
    }
    out
}

/// Builds a curve object. A curve with neither bevel nor extrusion has no
/// surface: the mesh is empty but still carries its spine.
pub fn make_curve_object(kind: CurveKind, params: &Params) -> Result<Built, KernelError> {
    let bevel = params.non_negative("bevel_depth", 0.0)?;
    let extrude = params.non_negative("extrude", 0.0)?;
    let fill_caps = params.boolean("fill_caps", false)?;
    let curve = match kind {
        CurveKind::Bezier => {
            let pts = params.point_list("points")?;
            if pts.len() < 2 {
                return Err(KernelError::InvalidParam {
                    name: "points".into(),
                    reason: format!("needs at least 2 points, got {}", pts.len()),
                });
            }
            check_distinct(&pts, false)?;
            Polyline {
                points: bezier_samples(&pts),
                closed: false,
            }
        }
        CurveKind::Polyline => {
            let pts = params.point_list("points")?;
            let closed = params.boolean("closed", false)?;
            let need = if closed { 3 } else { 2 };
            if pts.len() < need {
                return Err(KernelError::InvalidParam {
                    name: "points".into(),
                    reason: format!("needs at least {need} points, got {}", pts.len()),
                });
            }
            check_distinct(&pts, closed)?;
            Polyline { points: pts, closed }
        }
        CurveKind::Circle => {
            let radius = params.positive("radius", 1.0)?;
            let segments = params.count("segments", 32, 3)?;
            Polyline {
                points: (0..segments)
                    .map(|j| {
                        let a = TAU * j as f64 / segments as f64;
                        Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
                    })
                    .collect(),
                closed: true,
            }
        }
    };
    let mut warnings = Vec::new();
    let mut mesh = if bevel > 0.0 {
        sweep_tube(&curve, bevel, extrude, fill_caps)
    } else if extrude > 0.0 {
        extrude_ribbon(&curve, extrude, fill_caps)
    } else {
        warnings.push(format!(
            "{kind} has bevel_depth=0 and extrude=0, so it has no surface"
        ));
        Mesh::empty()
    };
    mesh.spine = Some(curve.spine());
    let t = params.transform()?;
    Ok(Built {
        mesh: mesh.transformed(&t),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_tube_bounds() {
        let p = Params::new()
            .points("points", vec![Vec3::ZERO, Vec3::X])
            .num("bevel_depth", 0.1)
            .flag("fill_caps", true);
        let m = make_curve_object(CurveKind::Polyline, &p).unwrap().mesh;
        let b = m.aabb().unwrap();
        assert!((b.min - Vec3::new(0.0, -0.1, -0.1)).length() < 1e-12);
        assert!((b.max - Vec3::new(1.0, 0.1, 0.1)).length() < 1e-12);
        assert_eq!(m.boundary_edge_count(), 0);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn circle_ribbon() {
        let p = Params::new().num("radius", 1.0).num("segments", 64.0).num("extrude", 0.5);
        let m = make_curve_object(CurveKind::Circle, &p).unwrap().mesh;
        for v in &m.vertices {
            assert!((v.x * v.x + v.y * v.y - 1.0).abs() < 1e-9);
            assert!(v.z == 0.5 || v.z == -0.5);
        }
        assert_eq!(m.triangles.len(), 128);
    }

    #[test]
    fn bare_curve_is_empty_with_warning() {
        let p = Params::new().points("points", vec![Vec3::ZERO, Vec3::new(1.0, 1.0, 0.0)]);
        let b = make_curve_object(CurveKind::Bezier, &p).unwrap();
        assert!(!b.mesh.has_surface());
        assert_eq!(b.warnings.len(), 1);
        assert!(b.mesh.spine.is_some());
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Params::new()
            .points("points", vec![Vec3::ZERO, Vec3::ZERO, Vec3::X])
            .num("bevel_depth", 0.1);
        assert!(matches!(
            make_curve_object(CurveKind::Polyline, &p),
            Err(KernelError::DegenerateCurve(_))
        ));
    }

    #[test]
    fn closed_polyline_needs_three_points() {
        let p = Params::new()
            .points("points", vec![Vec3::ZERO, Vec3::X])
            .flag("closed", true)
            .num("bevel_depth", 0.1);
        assert!(make_curve_object(CurveKind::Polyline, &p).is_err());
    }

    #[test]
    fn closed_torus_tube_is_closed() {
        let p = Params::new().num("radius", 2.0).num("segments", 24.0).num("bevel_depth", 0.3);
        let m = make_curve_object(CurveKind::Circle, &p).unwrap().mesh;
        assert_eq!(m.boundary_edge_count(), 0);
        // torus volume 2 pi^2 R r^2, polygonal approximation is a bit smaller
        let exact = 2.0 * PI * PI * 2.0 * 0.09;
        let v = m.signed_volume();
        assert!(v > 0.9 * exact && v < exact, "{v} vs {exact}");
    }

    #[test]
    fn capped_extruded_square_is_solid() {
        let sq = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        for pts in [sq.clone(), sq.iter().rev().cloned().collect()] {
            let p = Params::new()
                .points("points", pts)
                .flag("closed", true)
                .num("extrude", 0.5)
                .flag("fill_caps", true);
            let m = make_curve_object(CurveKind::Polyline, &p).unwrap().mesh;
            assert_eq!(m.boundary_edge_count(), 0);
            assert!((m.signed_volume() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bezier_passes_through_points() {
        let pts = vec![Vec3::ZERO, Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 0.0, 1.0)];
        let s = bezier_samples(&pts);
        assert_eq!(s.len(), 2 * BEZIER_RESOLUTION + 1);
        assert_eq!(s[0], pts[0]);
        assert!((s[BEZIER_RESOLUTION] - pts[1]).length() < 1e-12);
        assert_eq!(*s.last().unwrap(), pts[2]);
    }
}
