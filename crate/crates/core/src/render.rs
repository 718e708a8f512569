//! Software rasterizer for the evaluator's images.
//!
//! Cameras orbit the scene's bounds centre. Azimuth 0 looks from the front
//! (−y) towards +y, positive azimuth swings the camera towards −x (the
//! viewer's left), elevation lifts it towards +z. The distance is chosen so
//! the bounding sphere fills 85% of the half-height of the view.

use image::{ImageEncoder, Rgb, RgbImage};

use crate::geometry::{primitives, Aabb, Mesh, Vec3};
use crate::gps::GpsGraph;

pub type Image = RgbImage;

pub const DEFAULT_SIZE: u32 = 512;
pub const BACKGROUND: [u8; 3] = [242, 242, 240];
pub const BASE_COLOR: [u8; 3] = [168, 178, 196];
/// Fraction of the half-height the bounding sphere may cover.
const FILL: f64 = 0.85;
const AMBIENT: f64 = 0.25;
const BOX_ALPHA: f64 = 0.22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("nothing to render")]
    EmptyScene,
    #[error("node '{0}' has no bounding volume")]
    MissingBounds(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub name: &'static str,
    pub azimuth: f64,
    pub elevation: f64,
    /// Vertical field of view in degrees.
    pub fov: f64,
}

impl Camera {
    pub fn new(name: &'static str, azimuth: f64, elevation: f64) -> Self {
        assert!(elevation > -90.0 && elevation < 90.0, "elevation must be inside (-90, 90)");
        Self {
            name,
            azimuth,
            elevation,
            fov: 45.0,
        }
    }

    /// Unit vector from the target towards the camera.
    pub fn direction(&self) -> Vec3 {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        Vec3::new(-az.sin() * el.cos(), -az.cos() * el.cos(), el.sin())
    }
}

/// Front-left and front-right three-quarter views and a steep view from
/// the rear.
pub fn preset_cameras() -> Vec<Camera> {
    vec![
        Camera::new("front_left", 45.0, 30.0),
        Camera::new("front_right", -45.0, 30.0),
        Camera::new("rear_top", 180.0, 70.0),
    ]
}

/// A camera framed on a particular box.
#[derive(Debug, Clone, Copy)]
pub struct View {
    pub eye: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    tan_half: f64,
    size: u32,
}

impl View {
    pub fn new(cam: &Camera, bounds: &Aabb, size: u32) -> Self {
        let r = bounds.half_diagonal().max(1e-9);
        let tan_half = (cam.fov.to_radians() / 2.0).tan();
        let k = FILL * tan_half;
        let dist = r * (1.0 + 1.0 / (k * k)).sqrt();
        let dir = cam.direction();
        let eye = bounds.center() + dir * dist;
        let forward = -dir;
        let right = forward.cross(Vec3::Z).normalize_or_zero();
        let up = right.cross(forward);
        Self {
            eye,
            right,
            up,
            forward,
            tan_half,
            size,
        }
    }

    /// Pixel coordinates (x right, y down) and view depth.
    pub fn project(&self, p: Vec3) -> (f64, f64, f64) {
        let v = p - self.eye;
        let z = v.dot(self.forward);
        let x = v.dot(self.right) / (z * self.tan_half);
        let y = v.dot(self.up) / (z * self.tan_half);
        let s = self.size as f64;
        ((x + 1.0) * 0.5 * s, (1.0 - y) * 0.5 * s, z)
    }
}

fn scene_bounds<'a>(meshes: impl IntoIterator<Item = &'a Mesh>) -> Option<Aabb> {
    let mut acc: Option<Aabb> = None;
    for m in meshes {
        if !m.has_surface() {
            continue;
        }
        if let Ok(b) = m.aabb() {
            acc = Some(acc.map_or(b, |a| a.union(&b)));
        }
    }
    acc
}

struct Canvas {
    img: RgbImage,
    /// 1/z per pixel; 0 is infinitely far.
    depth: Vec<f64>,
}

impl Canvas {
    fn new(size: u32) -> Self {
        Self {
            img: RgbImage::from_pixel(size, size, Rgb(BACKGROUND)),
            depth: vec![0.0; (size * size) as usize],
        }
    }

    fn size(&self) -> u32 {
        self.img.width()
    }

    /// Fills a triangle with a flat colour, depth-tested.
    fn triangle(&mut self, view: &View, tri: [Vec3; 3], color: [f64; 3]) {
        let p = tri.map(|v| view.project(v));
        let area = edge(p[0], p[1], p[2].0, p[2].1);
        if area.abs() < 1e-12 {
            return;
        }
        let s = self.size() as f64;
        let xmin = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let xmax = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max).ceil().min(s - 1.0);
        let ymin = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let ymax = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max).ceil().min(s - 1.0);
        if xmin > xmax || ymin > ymax {
            return;
        }
        let px = Rgb(color.map(|c| c.round().clamp(0.0, 255.0) as u8));
        let inv = [1.0 / p[0].2, 1.0 / p[1].2, 1.0 / p[2].2];
        for y in ymin as u32..=ymax as u32 {
            for x in xmin as u32..=xmax as u32 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let w0 = edge(p[1], p[2], cx, cy) / area;
                let w1 = edge(p[2], p[0], cx, cy) / area;
                let w2 = edge(p[0], p[1], cx, cy) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let iz = w0 * inv[0] + w1 * inv[1] + w2 * inv[2];
                let idx = (y * self.size() + x) as usize;
                if iz > self.depth[idx] {
                    self.depth[idx] = iz;
                    self.img.put_pixel(x, y, px);
                }
            }
        }
    }

    /// Blends a triangle over the image, ignoring depth.
    fn blend_triangle(&mut self, view: &View, tri: [Vec3; 3], color: [u8; 3], alpha: f64) {
        let p = tri.map(|v| view.project(v));
        let area = edge(p[0], p[1], p[2].0, p[2].1);
        if area.abs() < 1e-12 {
            return;
        }
        let s = self.size() as f64;
        let xmin = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let xmax = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max).ceil().min(s - 1.0);
        let ymin = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).floor().max(0.0);
        let ymax = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max).ceil().min(s - 1.0);
        if xmin > xmax || ymin > ymax {
            return;
        }
        for y in ymin as u32..=ymax as u32 {
            for x in xmin as u32..=xmax as u32 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let w0 = edge(p[1], p[2], cx, cy) / area;
                let w1 = edge(p[2], p[0], cx, cy) / area;
                let w2 = edge(p[0], p[1], cx, cy) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let old = self.img.get_pixel(x, y).0;
                let mixed: [u8; 3] =
                    [0, 1, 2].map(|k| (old[k] as f64 * (1.0 - alpha) + color[k] as f64 * alpha).round() as u8);
                self.img.put_pixel(x, y, Rgb(mixed));
            }
        }
    }

    /// Two-pixel-wide line in a solid colour.
    fn line(&mut self, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
        let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
        let n = self.size() as i64;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let x = (a.0 + (b.0 - a.0) * t).floor() as i64;
            let y = (a.1 + (b.1 - a.1) * t).floor() as i64;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 && px < n && py < n {
                    self.img.put_pixel(px as u32, py as u32, Rgb(color));
                }
            }
        }
    }
}

fn edge(a: (f64, f64, f64), b: (f64, f64, f64), x: f64, y: f64) -> f64 {
    (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
}

/// Renders meshes in the base colour.
pub fn render(meshes: &[Mesh], cam: &Camera, size: u32) -> Result<Image, RenderError> {
    let items: Vec<(&Mesh, [u8; 3])> = meshes.iter().map(|m| (m, BASE_COLOR)).collect();
    render_colored(&items, cam, size)
}

/// Renders each mesh in its own colour with flat Lambert shading from a
/// light just above the camera. Faces are lit from both sides.
pub fn render_colored(items: &[(&Mesh, [u8; 3])], cam: &Camera, size: u32) -> Result<Image, RenderError> {
    let bounds = scene_bounds(items.iter().map(|(m, _)| *m)).ok_or(RenderError::EmptyScene)?;
    render_framed(items, cam, size, &bounds)
}

/// Like [`render_colored`] but framed on `bounds`.
pub fn render_framed(items: &[(&Mesh, [u8; 3])], cam: &Camera, size: u32, bounds: &Aabb) -> Result<Image, RenderError> {
    if items.iter().all(|(m, _)| !m.has_surface()) {
        return Err(RenderError::EmptyScene);
    }
    let view = View::new(cam, bounds, size);
    let mut canvas = Canvas::new(size);
    // One directional light from behind the camera, raised a little, so
    // coplanar faces shade alike and tops read differently from sides.
    let light = (cam.direction() + Vec3::new(0.0, 0.0, 0.6)).normalize_or_zero();
    for (mesh, color) in items {
        for tri in mesh.triangle_positions() {
            let Some(n) = (tri[1] - tri[0]).cross(tri[2] - tri[0]).try_normalize() else {
                continue;
            };
            let shade = AMBIENT + (1.0 - AMBIENT) * n.dot(light).abs();
            let c = color.map(|c| c as f64 * shade);
            canvas.triangle(&view, tri, c);
        }
    }
    Ok(canvas.img)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendEntry {
    pub node: String,
    pub color: [u8; 3],
    pub color_name: String,
}

const NAMED: &[([u8; 3], &str)] = &[
    ([230, 25, 75], "red"),
    ([60, 180, 75], "green"),
    ([0, 130, 200], "blue"),
    ([245, 130, 48], "orange"),
    ([145, 30, 180], "purple"),
    ([70, 210, 220], "cyan"),
    ([240, 50, 230], "magenta"),
    ([150, 110, 40], "brown"),
    ([0, 0, 128], "navy"),
    ([128, 128, 0], "olive"),
    ([0, 128, 128], "teal"),
    ([128, 0, 0], "maroon"),
    ([210, 190, 20], "mustard"),
    ([40, 40, 40], "black"),
];

fn rgb_dist(a: [u8; 3], b: [u8; 3]) -> f64 {
    let d: f64 = (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum();
    d.sqrt()
}

/// `n` colours, pairwise at least 40 apart in RGB and clearly different
/// from the background. The first ones are named colours; the rest are
/// picked by farthest-point search over a grid.
pub fn palette(n: usize) -> Vec<([u8; 3], String)> {
    let mut out: Vec<([u8; 3], String)> = NAMED.iter().take(n).map(|(c, s)| (*c, s.to_string())).collect();
    if out.len() == n {
        return out;
    }
    let grid: Vec<[u8; 3]> = (0..8u32)
        .flat_map(|r| (0..8u32).flat_map(move |g| (0..8u32).map(move |b| [r, g, b].map(|v| (v * 255 / 7) as u8))))
        .filter(|c| rgb_dist(*c, BACKGROUND) >= 80.0)
        .collect();
    while out.len() < n {
        let best = grid
            .iter()
            .map(|c| {
                let d = out.iter().map(|(o, _)| rgb_dist(*c, *o)).fold(f64::INFINITY, f64::min);
                (d, *c)
            })
            .fold((f64::NEG_INFINITY, [0u8; 3]), |acc, x| if x.0 > acc.0 { x } else { acc });
        if best.0 < 40.0 {
            // Grid exhausted; fall back to a finer sweep.
            let c = [(out.len() * 37 % 256) as u8, (out.len() * 91 % 256) as u8, (out.len() * 53 % 256) as u8];
            out.push((c, format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])));
            continue;
        }
        let c = best.1;
        out.push((c, format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])));
    }
    out
}

/// Each node's bounds as a translucent box with solid coloured edges.
pub fn render_bboxes(graph: &GpsGraph, cam: &Camera, size: u32) -> Result<(Image, Vec<LegendEntry>), RenderError> {
    let mut boxes = Vec::with_capacity(graph.nodes.len());
    for n in &graph.nodes {
        let b = n.bounds.ok_or_else(|| RenderError::MissingBounds(n.name.clone()))?;
        boxes.push(b.aabb());
    }
    let bounds = boxes
        .iter()
        .copied()
        .reduce(|a, b| a.union(&b))
        .ok_or(RenderError::EmptyScene)?;
    let colors = palette(boxes.len());
    let legend: Vec<LegendEntry> = graph
        .nodes
        .iter()
        .zip(&colors)
        .map(|(n, (c, name))| LegendEntry {
            node: n.name.clone(),
            color: *c,
            color_name: name.clone(),
        })
        .collect();

    let view = View::new(cam, &bounds, size);
    let mut canvas = Canvas::new(size);
    // Far boxes first so nearer fills tint over them.
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    let dist = |i: usize| (boxes[i].center() - view.eye).length();
    order.sort_by(|&a, &b| dist(b).total_cmp(&dist(a)).then(a.cmp(&b)));
    let cube = primitives::cube();
    for &i in &order {
        let b = &boxes[i];
        let c = b.center();
        let h = b.extent() * 0.5;
        for tri in cube.triangle_positions() {
            let t = tri.map(|v| c + v.mul_elem(h));
            canvas.blend_triangle(&view, t, colors[i].0, BOX_ALPHA);
        }
    }
    for &i in &order {
        let corners = boxes[i].corners();
        for (a, b) in box_edges(&corners) {
            let pa = view.project(a);
            let pb = view.project(b);
            canvas.line((pa.0, pa.1), (pb.0, pb.1), colors[i].0);
        }
    }
    Ok((canvas.img, legend))
}

/// The 12 edges of a box given by [`Aabb::corners`].
fn box_edges(c: &[Vec3; 8]) -> Vec<(Vec3, Vec3)> {
    let mut out = Vec::with_capacity(12);
    for i in 0..8 {
        for j in i + 1..8 {
            let d = c[i] - c[j];
            let axes = [d.x, d.y, d.z].iter().filter(|v| v.abs() > 0.0).count();
            if axes == 1 {
                out.push((c[i], c[j]));
            }
        }
    }
    out
}

/// Legend lines for the evaluator prompt, in graph order.
pub fn legend_text(legend: &[LegendEntry]) -> String {
    let mut s = String::new();
    for e in legend {
        let [r, g, b] = e.color;
        s.push_str(&format!("- {}: {} (rgb {r}, {g}, {b})\n", e.node, e.color_name));
    }
    s
}

pub fn encode_png(img: &Image) -> Vec<u8> {
    let mut buf = Vec::new();
    image::codecs::png::PngEncoder::new(&mut buf)
        .write_image(img.as_raw(), img.width(), img.height(), image::ExtendedColorType::Rgb8)
        .expect("in-memory PNG encoding does not fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gps::{BoundingVolume, GpsNode};

    #[test]
    fn presets() {
        let c = preset_cameras();
        assert_eq!(c.len(), 3);
        assert_eq!(c, preset_cameras());
        assert!(c[0].azimuth != c[1].azimuth && c[1].azimuth != c[2].azimuth && c[0].azimuth != c[2].azimuth);
    }

    #[test]
    fn centre_projects_to_centre() {
        let b = Aabb::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 3.0, 7.0));
        for cam in preset_cameras() {
            let v = View::new(&cam, &b, 512);
            let (x, y, _) = v.project(b.center());
            assert!((x - 256.0).abs() < 1.0 && (y - 256.0).abs() < 1.0);
            for c in b.corners() {
                let (x, y, _) = v.project(c);
                assert!(x > 0.05 * 512.0 && x < 0.95 * 512.0, "{x}");
                assert!(y > 0.05 * 512.0 && y < 0.95 * 512.0, "{y}");
            }
        }
    }

    #[test]
    fn cube_coverage_and_determinism() {
        let cube = primitives::cube();
        for cam in preset_cameras() {
            let img = render(std::slice::from_ref(&cube), &cam, 512).unwrap();
            let covered = img.pixels().filter(|p| p.0 != BACKGROUND).count() as f64 / (512.0 * 512.0);
            assert!(covered > 0.1 && covered < 0.9, "{covered}");
            let again = render(std::slice::from_ref(&cube), &cam, 512).unwrap();
            assert_eq!(encode_png(&img), encode_png(&again));
        }
        assert_eq!(render(&[], &preset_cameras()[0], 64), Err(RenderError::EmptyScene));
    }

    #[test]
    fn palette_is_separated() {
        for n in [1, 5, 14, 30, 60] {
            let p = palette(n);
            assert_eq!(p.len(), n);
            for i in 0..n {
                for j in i + 1..n {
                    assert!(rgb_dist(p[i].0, p[j].0) >= 40.0, "{n}: {:?} {:?}", p[i], p[j]);
                }
            }
        }
    }

    #[test]
    fn bbox_render() {
        let g = GpsGraph {
            root_summary: String::new(),
            nodes: vec![
                GpsNode::new("seat", "", "").with_bounds(BoundingVolume::new(Vec3::ZERO, Vec3::new(2.0, 2.0, 0.2)).unwrap()),
                GpsNode::new("back", "", "")
                    .with_bounds(BoundingVolume::new(Vec3::new(0.0, 0.9, 1.0), Vec3::new(2.0, 0.2, 2.0)).unwrap()),
            ],
        };
        let (img, legend) = render_bboxes(&g, &preset_cameras()[0], 256).unwrap();
        assert_eq!(legend.iter().map(|e| e.node.as_str()).collect::<Vec<_>>(), vec!["seat", "back"]);
        for e in &legend {
            assert!(img.pixels().any(|p| p.0 == e.color));
        }
        let mut g2 = g.clone();
        g2.nodes[1].bounds = None;
        assert!(matches!(render_bboxes(&g2, &preset_cameras()[0], 64), Err(RenderError::MissingBounds(_))));
        assert!(legend_text(&legend).starts_with("- seat: red"));
    }
}
