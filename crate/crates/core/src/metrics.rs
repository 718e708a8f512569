//! Shape-quality metrics: Hausdorff distance between surface samples,
//! intersection over ground truth on voxel grids, compile rate and the
//! yes/no question pass rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::executor::Assembly;
use crate::geometry::{Aabb, Mesh, Vec3};
use crate::llm::{AgentRole, ChatBackend, ChatMessage, ChatRequest, LlmError};

pub const DEFAULT_SAMPLE_POINTS: usize = 10_000;
pub const DEFAULT_VOXEL_RES: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("the mesh has no surface to sample")]
    EmptyMesh,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("{0} mesh is not closed; inside/outside is undefined")]
    OpenMesh(&'static str),
    #[error("the ground truth occupies no voxels at this resolution")]
    EmptyVoxelization,
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

/// `n` points spread uniformly over the surface area, reproducible for a
/// given seed.
pub fn sample_points(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud, MetricsError> {
    if n == 0 {
        return Err(MetricsError::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.face_cross(i).length() * 0.5;
        cumulative.push(total);
    }
    if total.is_nan() || total <= 0.0 {
        return Err(MetricsError::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(i);
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let su = u.sqrt();
        points.push(a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v));
    }
    Ok(PointCloud { points })
}

fn dist2(a: Vec3, b: Vec3) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    dx * dx + dy * dy + dz * dz
}

/// Median-split kd-tree over a point slice. Distances are computed exactly
/// as in the brute-force definition, so results match it bit for bit.
struct KdTree {
    points: Vec<Vec3>,
    /// Implicit tree: the median of each range is its node.
    axes: Vec<u8>,
}

impl KdTree {
    fn build(points: &[Vec3]) -> Self {
        let mut pts = points.to_vec();
        let mut axes = vec![0u8; pts.len()];
        Self::split(&mut pts, &mut axes);
        Self { points: pts, axes }
    }

    fn split(pts: &mut [Vec3], axes: &mut [u8]) {
        if pts.len() <= 1 {
            return;
        }
        let b = Aabb::from_points(pts.iter()).expect("non-empty");
        let e = b.extent();
        let axis = if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        };
        let mid = pts.len() / 2;
        pts.select_nth_unstable_by(mid, |a, b| a.get(axis).total_cmp(&b.get(axis)));
        axes[mid] = axis as u8;
        let (lp, rp) = pts.split_at_mut(mid);
        let (la, ra) = axes.split_at_mut(mid);
        Self::split(lp, la);
        Self::split(&mut rp[1..], &mut ra[1..]);
    }

    fn nearest2(&self, q: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(0, self.points.len(), q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, q: Vec3, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.points[mid];
        let d = dist2(p, q);
        if d < *best {
            *best = d;
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let delta = q.get(axis) - p.get(axis);
        let (near, far) = if delta < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(near.0, near.1, q, best);
        if delta * delta <= *best {
            self.search(far.0, far.1, q, best);
        }
    }
}

fn directed(a: &[Vec3], tree: &KdTree) -> f64 {
    a.iter().map(|&p| tree.nearest2(p)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64, MetricsError> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(MetricsError::EmptyCloud);
    }
    let ta = KdTree::build(&a.points);
    let tb = KdTree::build(&b.points);
    Ok(directed(&a.points, &tb).max(directed(&b.points, &ta)).sqrt())
}

/// Voxel occupancy at the centres of a `res³` grid over `[0, 1]³`, by the
/// nonzero winding rule along vertical rays.
fn voxelize(mesh: &Mesh, res: usize) -> Vec<bool> {
    // Rays are nudged off the grid so they do not run exactly along the
    // edges of axis-aligned or diagonal faces.
    const NUDGE: (f64, f64) = (1.3e-7 * std::f64::consts::PI, 0.7e-7 * std::f64::consts::E);
    let cell = 1.0 / res as f64;
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); res * res];
    let column = |v: f64| ((v / cell - 0.5).floor() + 1.0).clamp(0.0, res as f64) as usize;
    for (t, [a, b, c]) in mesh.triangle_positions().enumerate() {
        let (x0, x1) = (a.x.min(b.x).min(c.x), a.x.max(b.x).max(c.x));
        let (y0, y1) = (a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y));
        let (i0, i1) = (column(x0 - 1e-6), column(x1 + 1e-6));
        let (j0, j1) = (column(y0 - 1e-6), column(y1 + 1e-6));
        for i in i0..i1.min(res) {
            for j in j0..j1.min(res) {
                bins[i * res + j].push(t);
            }
        }
    }
    let mut occ = vec![false; res * res * res];
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let px = (i as f64 + 0.5) * cell + NUDGE.0;
            let py = (j as f64 + 0.5) * cell + NUDGE.1;
            crossings.clear();
            for &t in &bins[i * res + j] {
                let [a, b, c] = mesh.triangle(t);
                let area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                if area == 0.0 {
                    continue;
                }
                let w0 = (b.x - px) * (c.y - py) - (b.y - py) * (c.x - px);
                let w1 = (c.x - px) * (a.y - py) - (c.y - py) * (a.x - px);
                let w2 = (a.x - px) * (b.y - py) - (a.y - py) * (b.x - px);
                let inside = if area > 0.0 {
                    w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
                } else {
                    w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
                };
                if !inside {
                    continue;
                }
                let z = (w0 * a.z + w1 * b.z + w2 * c.z) / area;
                crossings.push((z, if area > 0.0 { 1 } else { -1 }));
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Winding of a point = signed crossings above it.
            let mut above: i32 = crossings.iter().map(|c| c.1).sum();
            let mut next = 0;
            for k in 0..res {
                let pz = (k as f64 + 0.5) * cell;
                while next < crossings.len() && crossings[next].0 <= pz {
                    above -= crossings[next].1;
                    next += 1;
                }
                occ[(i * res + j) * res + k] = above != 0;
            }
        }
    }
    occ
}

/// Maps the ground truth's bounding box onto `[0, 1]³` (uniform scale,
/// centred) and applies the same map to `m`.
fn normalize(m: &Mesh, frame: &Aabb) -> Mesh {
    let e = frame.extent();
    let s = 1.0 / e.x.max(e.y).max(e.z);
    let c = frame.center();
    let mut out = m.clone();
    for v in &mut out.vertices {
        *v = (*v - c) * s + Vec3::splat(0.5);
    }
    out
}

/// `|V_gen ∩ V_gt| / |V_gt|` on a `res³` grid in the ground truth's
/// normalized frame.
pub fn iogt(generated: &Mesh, ground_truth: &Mesh, res: usize) -> Result<f64, MetricsError> {
    if res < 8 {
        return Err(MetricsError::InvalidArgument(format!("voxel resolution must be at least 8, got {res}")));
    }
    if !generated.has_surface() || !ground_truth.has_surface() {
        return Err(MetricsError::EmptyMesh);
    }
    if !ground_truth.is_closed_surface() {
        return Err(MetricsError::OpenMesh("ground-truth"));
    }
    if !generated.is_closed_surface() {
        return Err(MetricsError::OpenMesh("generated"));
    }
    let frame = ground_truth.aabb().map_err(|_| MetricsError::EmptyMesh)?;
    let gt = voxelize(&normalize(ground_truth, &frame), res);
    let gen = voxelize(&normalize(generated, &frame), res);
    let total = gt.iter().filter(|&&v| v).count();
    if total == 0 {
        return Err(MetricsError::EmptyVoxelization);
    }
    let both = gt.iter().zip(&gen).filter(|(a, b)| **a && **b).count();
    Ok(both as f64 / total as f64)
}

/// Result of one generation run, as far as compile rate is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub failed_nodes: usize,
    pub mesh_empty: bool,
}

impl RunOutcome {
    pub fn from_assembly(a: &Assembly) -> Self {
        Self {
            failed_nodes: a.failures.len(),
            mesh_empty: !a.components.iter().any(Mesh::has_surface),
        }
    }

    pub fn compiled(&self) -> bool {
        self.failed_nodes == 0 && !self.mesh_empty
    }
}

pub fn compile_rate(outcomes: &[RunOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::InvalidArgument("no runs to rate".into()));
    }
    Ok(outcomes.iter().filter(|o| o.compiled()).count() as f64 / outcomes.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unclear,
}

impl Answer {
    /// First word of the reply; anything else counts as unclear.
    pub fn normalize(reply: &str) -> Self {
        let word: String = reply
            .trim()
            .chars()
            .take_while(|c| c.is_alphabetic())
            .flat_map(char::to_lowercase)
            .collect();
        match word.as_str() {
            "yes" => Answer::Yes,
            "no" => Answer::No,
            _ => Answer::Unclear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VqaReport {
    pub answers: Vec<Answer>,
    pub pass_rate: f64,
}

/// Asks each question against the renders (PNG bytes); the pass rate is
/// the share of "yes" answers.
pub fn vqa_pass_rate(renders: &[Vec<u8>], questions: &[String], backend: &dyn ChatBackend) -> Result<VqaReport, MetricsError> {
    if questions.is_empty() {
        return Err(MetricsError::InvalidArgument("no questions".into()));
    }
    if renders.is_empty() {
        return Err(MetricsError::InvalidArgument("no renders".into()));
    }
    let mut answers = Vec::with_capacity(questions.len());
    for q in questions {
        let text = crate::agents::prompts::fill(crate::agents::prompts::VQA, &[("question", q.trim())]);
        let req = ChatRequest::new(
            AgentRole::Evaluator,
            vec![ChatMessage::user(text).with_images(renders.to_vec())],
        );
        answers.push(Answer::normalize(&backend.complete(&req)?));
    }
    let yes = answers.iter().filter(|a| **a == Answer::Yes).count();
    Ok(VqaReport {
        pass_rate: yes as f64 / answers.len() as f64,
        answers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::llm::FnBackend;
    use proptest::prelude::*;

    fn brute(a: &[Vec3], b: &[Vec3]) -> f64 {
        let h = |x: &[Vec3], y: &[Vec3]| {
            x.iter()
                .map(|p| y.iter().map(|q| dist2(*p, *q)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        h(a, b).max(h(b, a)).sqrt()
    }

    fn cloud(points: Vec<Vec3>) -> PointCloud {
        PointCloud { points }
    }

    /// Box spanning `min..max` (the kernel cube spans -1..1).
    fn box_mesh(min: Vec3, max: Vec3) -> Mesh {
        let mut m = primitives::cube();
        for v in &mut m.vertices {
            *v = min + ((*v + Vec3::splat(1.0)) * 0.5).mul_elem(max - min);
        }
        m
    }

    #[test]
    fn single_triangle_sample() {
        let m = Mesh::new(
            vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 2.0), Vec3::new(0.0, 1.0, 3.0)],
            vec![[0, 1, 2]],
        );
        let p = sample_points(&m, 1, 7).unwrap().points[0];
        // Plane z = 1 + x + 2y.
        assert!((p.z - (1.0 + p.x + 2.0 * p.y)).abs() < 1e-9);
        assert!(sample_points(&Mesh::empty(), 3, 0).is_err());
    }

    #[test]
    fn face_shares_are_even() {
        let m = primitives::cube();
        let pts = sample_points(&m, 60_000, 42).unwrap().points;
        assert_eq!(pts, sample_points(&m, 60_000, 42).unwrap().points);
        let mut counts = [0usize; 6];
        for p in &pts {
            let a = [p.x, p.y, p.z];
            let k = (0..3).max_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs())).unwrap();
            counts[k * 2 + usize::from(a[k] > 0.0)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 60_000.0 - 1.0 / 6.0).abs() < 0.01, "{counts:?}");
        }
        // Chi-squared with 5 degrees of freedom; 15.09 is the p = 0.01 cut.
        let e = 10_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 15.09, "chi2 {chi2}");
    }

    #[test]
    fn hausdorff_basics() {
        let a = cloud(vec![Vec3::ZERO]);
        let b = cloud(vec![Vec3::new(1.0, 0.0, 0.0)]);
        assert_eq!(hausdorff(&a, &b).unwrap(), 1.0);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert!(hausdorff(&a, &cloud(vec![])).is_err());
    }

    #[test]
    fn hausdorff_matches_brute_force_with_duplicates() {
        let pts = sample_points(&primitives::cube(), 2000, 3).unwrap().points;
        let mut b = sample_points(&primitives::cube(), 1500, 4).unwrap().points;
        b.extend(std::iter::repeat_n(Vec3::new(0.5, 0.5, 0.5), 300));
        assert_eq!(hausdorff(&cloud(pts.clone()), &cloud(b.clone())).unwrap(), brute(&pts, &b));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn hausdorff_equals_brute(
            a in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..120),
            b in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..120),
        ) {
            let a: Vec<Vec3> = a.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
            let b: Vec<Vec3> = b.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
            let h = hausdorff(&cloud(a.clone()), &cloud(b.clone())).unwrap();
            prop_assert!((h - brute(&a, &b)).abs() <= 1e-12);
            prop_assert_eq!(h, hausdorff(&cloud(b), &cloud(a)).unwrap());
        }
    }

    #[test]
    fn iogt_cases() {
        let m = primitives::cube();
        assert_eq!(iogt(&m, &m, 16).unwrap(), 1.0);
        let far = box_mesh(Vec3::splat(3.0), Vec3::splat(4.0));
        assert_eq!(iogt(&far, &m, 16).unwrap(), 0.0);
        for res in [16, 32, 64] {
            let half = box_mesh(Vec3::splat(-1.0), Vec3::new(0.0, 1.0, 1.0));
            let v = iogt(&half, &m, res).unwrap();
            assert!((v - 0.5).abs() <= 2.0 / res as f64, "res {res}: {v}");
        }
        let sphere = crate::geometry::make_primitive(
            crate::geometry::PrimitiveKind::Sphere,
            &crate::geometry::Params::default(),
        )
        .unwrap()
        .mesh;
        assert_eq!(iogt(&sphere, &sphere, 24).unwrap(), 1.0);
        let v = iogt(&sphere, &m, 32).unwrap();
        // Inscribed sphere: π/6 of the cube volume.
        assert!((v - std::f64::consts::PI / 6.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn iogt_needs_closed_meshes() {
        let open = Mesh::new(
            vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let m = primitives::cube();
        assert_eq!(iogt(&m, &open, 16), Err(MetricsError::OpenMesh("ground-truth")));
        assert_eq!(iogt(&open, &m, 16), Err(MetricsError::OpenMesh("generated")));
        assert!(iogt(&m, &m, 4).is_err());
    }

    #[test]
    fn compile_rates() {
        let ok = RunOutcome { failed_nodes: 0, mesh_empty: false };
        let bad = RunOutcome { failed_nodes: 1, mesh_empty: false };
        assert_eq!(compile_rate(&[ok, ok, ok, bad, bad]).unwrap(), 0.6);
        assert_eq!(compile_rate(&[ok]).unwrap(), 1.0);
        assert_eq!(compile_rate(&[bad]).unwrap(), 0.0);
        assert!(compile_rate(&[]).is_err());
    }

    #[test]
    fn vqa() {
        let replies = ["Yes.", "yes", "No, it is not", "unclear", "YES"];
        let n = std::sync::atomic::AtomicUsize::new(0);
        let b = FnBackend::new(move |_| Ok(replies[n.fetch_add(1, std::sync::atomic::Ordering::SeqCst)].to_string()));
        let qs: Vec<String> = (0..5).map(|i| format!("question {i}?")).collect();
        let r = vqa_pass_rate(&[vec![1]], &qs, &b).unwrap();
        assert_eq!(r.pass_rate, 0.6);
        assert_eq!(r.answers[3], Answer::Unclear);
        assert!(vqa_pass_rate(&[vec![1]], &[], &b).is_err());
        assert_eq!(Answer::normalize("maybe"), Answer::Unclear);
    }
}
