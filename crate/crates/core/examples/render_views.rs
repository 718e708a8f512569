//! Renders a mesh from the three preset cameras, plus the coloured
//! bounding-box view the agents look at.
//!
//!     cargo run --example render_views -- [mesh.obj] [out_dir]

use std::path::PathBuf;

use shapecraft::geometry::io::read_obj;
use shapecraft::geometry::{make_primitive, Params, PrimitiveKind, Vec3};
use shapecraft::gps::{BoundingVolume, GpsGraph, GpsNode};
use shapecraft::render::{legend_text, preset_cameras, render, render_bboxes, DEFAULT_SIZE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let meshes = match args.next() {
        Some(p) => read_obj(&std::fs::read_to_string(p)?)?,
        None => vec![
            make_primitive(PrimitiveKind::Capsule, &Params::new())?.mesh,
            make_primitive(PrimitiveKind::Cone, &Params::new().vec3("position", Vec3::new(2.5, 0.0, 0.0)))?.mesh,
        ],
    };
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "renders".into()));
    std::fs::create_dir_all(&dir)?;
    for cam in preset_cameras() {
        let path = dir.join(format!("render_{}.png", cam.name));
        render(&meshes, &cam, DEFAULT_SIZE)?.save(&path)?;
        println!("wrote {}", path.display());
    }

    let mut g = GpsGraph::default();
    for (i, m) in meshes.iter().enumerate() {
        let b = BoundingVolume::from_aabb(&m.aabb()?)?;
        g.nodes.push(GpsNode::new(&format!("part_{i}"), "", "").with_bounds(b));
    }
    let cam = &preset_cameras()[0];
    let (img, legend) = render_bboxes(&g, cam, DEFAULT_SIZE)?;
    img.save(dir.join("bboxes.png"))?;
    print!("{}", legend_text(&legend));
    Ok(())
}
