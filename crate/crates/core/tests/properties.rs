//! Round trips and invariants over generated inputs.

use proptest::prelude::*;
use shapecraft::executor::{fit_to_bounds, fit_uniform};
use shapecraft::geometry::io::{read_obj, write_obj};
use shapecraft::geometry::primitives::uv_sphere;
use shapecraft::geometry::{Transform, Vec3};
use shapecraft::gps::{parse_graph_jsonl, serialize_graph, BoundingVolume, GpsGraph, GpsNode};

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn bounds() -> impl Strategy<Value = BoundingVolume> {
    (vec3(-50.0, 50.0), vec3(1e-3, 20.0)).prop_map(|(c, s)| BoundingVolume::new(c, s).unwrap())
}

proptest! {
    #[test]
    fn graph_round_trips_exactly(
        bs in prop::collection::vec(bounds(), 1..5),
        score in prop::option::of(0u8..=10),
        desc in "[a-z][a-z ,.'\"]{0,30}",
    ) {
        let mut g = GpsGraph { root_summary: "parts".into(), nodes: Vec::new() };
        for (i, b) in bs.into_iter().enumerate() {
            let mut n = GpsNode::new(&format!("part_{i}"), &desc, "somewhere").with_bounds(b);
            if i % 2 == 0 {
                n = n.with_code("x = cube(name=\"x\")\n");
                n.best_score = score;
            }
            g.nodes.push(n);
        }
        let (back, warnings) = parse_graph_jsonl(&serialize_graph(&g)).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(back, g);
    }

    #[test]
    fn obj_round_trips_exactly(p in vec3(-100.0, 100.0), s in vec3(0.01, 10.0)) {
        let m = uv_sphere(6, 4).transformed(&Transform::new(p, Vec3::ZERO, s)).with_tag("ball");
        let back = read_obj(&write_obj(std::slice::from_ref(&m))).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].vertices, &m.vertices);
        prop_assert_eq!(&back[0].triangles, &m.triangles);
        prop_assert_eq!(back[0].component_tag.as_deref(), Some("ball"));
    }

    #[test]
    fn uniform_fit_stays_inside(b in bounds(), s in vec3(0.1, 5.0)) {
        let m = uv_sphere(8, 5).transformed(&Transform::new(Vec3::ZERO, Vec3::ZERO, s));
        let box_ = b.aabb();
        let got = fit_uniform(&m, &b).unwrap().aabb().unwrap();
        let tol = 1e-9 * (1.0 + b.center.length() + b.size.length());
        for ax in 0..3 {
            prop_assert!(got.min.get(ax) >= box_.min.get(ax) - tol);
            prop_assert!(got.max.get(ax) <= box_.max.get(ax) + tol);
        }
        // At least one axis is filled.
        let filled = (0..3).any(|ax| (got.extent().get(ax) - b.size.get(ax)).abs() <= tol);
        prop_assert!(filled);
        let exact = fit_to_bounds(&m, &b).unwrap().aabb().unwrap();
        prop_assert!((exact.min - box_.min).length() <= tol && (exact.max - box_.max).length() <= tol);
    }
}
