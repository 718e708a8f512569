//! Builds every primitive, prints its counts and volume, then cuts a washer
//! with a boolean and writes everything to one OBJ.
//!
//!     cargo run --example kernel_primitives -- [out.obj]

use shapecraft::geometry::io::write_obj;
use shapecraft::geometry::{boolean, make_primitive, BooleanOp, Params, PrimitiveKind, Transform, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "primitives.obj".into());
    let mut parts = Vec::new();
    for (i, kind) in PrimitiveKind::ALL.into_iter().enumerate() {
        let p = Params::new().vec3("position", Vec3::new(3.0 * i as f64, 0.0, 0.0));
        let m = make_primitive(kind, &p)?.mesh;
        println!(
            "{:<9} {:>5} vertices {:>5} triangles  closed={}  volume={:.4}",
            kind.name(),
            m.vertices.len(),
            m.triangles.len(),
            m.is_closed_surface(),
            m.signed_volume()
        );
        parts.push(m.with_tag(kind.name()));
    }

    let disc = make_primitive(PrimitiveKind::Cylinder, &Params::new().num("depth", 0.3))?.mesh;
    let hole = make_primitive(PrimitiveKind::Cylinder, &Params::new().num("radius", 0.5))?.mesh;
    let washer = boolean(&disc, &hole, BooleanOp::Difference)?;
    for w in &washer.warnings {
        println!("warning: {w}");
    }
    let washer = washer.mesh.transformed(&Transform::translation(Vec3::new(0.0, 4.0, 0.0)));
    println!("washer    volume={:.4} (disc {:.4})", washer.signed_volume(), disc.signed_volume());
    parts.push(washer.with_tag("washer"));

    std::fs::write(&out, write_obj(&parts))?;
    println!("wrote {out}");
    Ok(())
}
